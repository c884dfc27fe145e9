"""Unpadded URL-safe base64."""

from __future__ import annotations

import base64
import re

ALPHABET = b"ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789-_"
_VALID = re.compile(rb"[A-Za-z0-9_-]*")


class IllegalCharacter(ValueError):
    pass


class BadLength(ValueError):
    pass


def encode(data: bytes) -> str:
    return base64.urlsafe_b64encode(bytes(data)).rstrip(b"=").decode("ascii")


def decode(text) -> bytes:
    raw = text.encode("ascii", "replace") if isinstance(text, str) else bytes(text)
    if not _VALID.fullmatch(raw):
        bad = next(c for c in raw if c not in ALPHABET)
        raise IllegalCharacter(f"byte {bad!r} is not in the base64url alphabet")
    if len(raw) % 4 == 1:
        raise BadLength("base64url text cannot have length 1 mod 4")
    return base64.urlsafe_b64decode(raw + b"=" * (-len(raw) % 4))
