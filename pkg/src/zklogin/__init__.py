"""zkLogin signatures over an R1CS JWT circuit."""
