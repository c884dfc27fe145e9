"""Signature protocol built on the circuit: ephemeral keys, addresses, signing, verification."""
