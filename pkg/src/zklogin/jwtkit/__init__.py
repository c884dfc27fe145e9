"""Out-of-circuit JWT tooling: base64url, RS256, claim spans and a mock provider."""
