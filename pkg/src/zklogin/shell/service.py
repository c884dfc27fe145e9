"""JSON-over-HTTP salt and prover services (plain HTTP, no TLS).

Both reject requests whose JWT does not verify against the registry before
doing any derivation or proving work.
"""

from __future__ import annotations

import base64
import hashlib
import json
import logging
import threading
from collections import OrderedDict
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from .. import backends
from ..backends import UnsatisfiedWitness
from ..jwtkit.jwt import (
    ClaimAbsent,
    ClaimNested,
    Jwt,
    JwtMalformed,
    claim_get,
    jwt_verify,
)
from ..jwtkit.registry import JwkRegistry, StaleKey, UnknownKid
from ..proto.address import SaltSeed, derive_address, derive_salt
from ..proto.zklogin import ZkLoginPK
from ..zkjwt import PublicInputs, WitnessBundle, fill_witness

log = logging.getLogger("zklogin.service")


class HttpError(Exception):
    def __init__(self, status: int, message: str):
        super().__init__(message)
        self.status = status


def _field(body: dict, name: str, kind):
    if name not in body:
        raise HttpError(400, f"missing field {name!r}")
    val = body[name]
    if not isinstance(val, kind) or isinstance(val, bool):
        raise HttpError(400, f"field {name!r} has the wrong type")
    return val


def _hex_int(body: dict, name: str) -> int:
    try:
        return int(_field(body, name, str), 16)
    except ValueError as exc:
        raise HttpError(400, f"field {name!r} is not hex") from exc


def authenticate(registry: JwkRegistry, token: str, t_cur: int | None) -> tuple:
    """(jwt, jwk) for a token signed by a registered, current key; else 401."""
    try:
        jwt = Jwt.parse(token)
        kid = jwt.kid
        jwk = registry.get(kid) if t_cur is None else registry.lookup(kid, t_cur)
        iss = claim_get(jwt, "iss").value
    except (JwtMalformed, UnknownKid, StaleKey, ClaimAbsent, ClaimNested, ValueError,
            UnicodeDecodeError, TypeError) as exc:
        raise HttpError(401, f"token rejected: {type(exc).__name__}") from exc
    if jwk.iss != iss or not jwt_verify(jwk.public, jwt):
        raise HttpError(401, "token rejected: bad signature")
    return jwt, jwk


class _Cache(OrderedDict):
    def __init__(self, cap: int):
        super().__init__()
        self.cap = cap

    def put(self, key, val):
        self[key] = val
        self.move_to_end(key)
        while len(self) > self.cap:
            self.popitem(last=False)


class SaltService:
    def __init__(self, seed: SaltSeed, registry: JwkRegistry, epoch: int | None = None):
        self._seed = seed
        self.registry = registry
        self.epoch = epoch

    def handle(self, path: str, body: dict) -> dict:
        if path != "/salt":
            raise HttpError(404, "not found")
        jwt, _ = authenticate(self.registry, _field(body, "jwt", str), self.epoch)
        counter = body.get("counter", 0)
        if not isinstance(counter, int) or isinstance(counter, bool) or counter < 0:
            raise HttpError(400, "counter must be a non-negative integer")
        try:
            sub, aud, iss = (claim_get(jwt, c).value for c in ("sub", "aud", "iss"))
        except (ClaimAbsent, ClaimNested) as exc:
            raise HttpError(401, "token lacks sub, aud or iss") from exc
        salt = derive_salt(self._seed, sub, aud, iss, counter)
        return {"salt": salt.to_bytes(32, "big").hex()}


class ProverService:
    """One proving job at a time; at most ``queue`` requests wait for it."""

    def __init__(self, pk: ZkLoginPK, queue: int = 4, cache_size: int = 64,
                 epoch: int | None = None):
        self.pk = pk
        self.epoch = epoch
        self.queue = queue
        self._job = threading.Lock()
        self._state = threading.Lock()
        self._waiting = 0
        self._inflight: dict = {}
        self._cache = _Cache(cache_size)
        self.hits = 0

    def _key(self, body: dict) -> str:
        fields = {k: body.get(k) for k in ("jwt", "salt", "r", "vk_u", "T_max", "hints")}
        return hashlib.sha256(json.dumps(fields, sort_keys=True).encode()).hexdigest()

    def handle(self, path: str, body: dict) -> dict:
        if path != "/prove":
            raise HttpError(404, "not found")
        jwt, jwk = authenticate(self.pk.registry, _field(body, "jwt", str), self.epoch)
        salt, r = _hex_int(body, "salt"), _hex_int(body, "r")
        try:
            vk_u = bytes.fromhex(_field(body, "vk_u", str))
        except ValueError as exc:
            raise HttpError(400, "vk_u is not hex") from exc
        if len(vk_u) != 32:
            raise HttpError(400, "vk_u must be 32 bytes")
        t_max = _field(body, "T_max", int)
        hints = body.get("hints") or {}
        if not isinstance(hints, dict) or not all(
                isinstance(v, list) and len(v) == 3 and all(isinstance(x, int) for x in v)
                for v in hints.values()):
            raise HttpError(400, "hints maps claim names to [i, l, j]")

        key = self._key(body)
        with self._state:
            if key in self._cache:
                self.hits += 1
                return dict(self._cache[key], cached=True)
            pending = self._inflight.get(key)
            if pending is None:
                if self._waiting >= self.queue:
                    raise HttpError(429, "prover busy")
                pending = self._inflight[key] = {"done": threading.Event()}
                self._waiting += 1
                owner = True
            else:
                owner = False
        if not owner:
            pending["done"].wait()
            if "error" in pending:
                raise pending["error"]
            with self._state:
                self.hits += 1
            return dict(pending["result"], cached=True)
        try:
            with self._job:
                result = self._prove(jwt, jwk, salt, r, vk_u, t_max, hints)
            with self._state:
                self._cache.put(key, result)
            pending["result"] = result
            return dict(result, cached=False)
        except HttpError as exc:
            pending["error"] = exc
            raise
        finally:
            with self._state:
                self._waiting -= 1
                self._inflight.pop(key, None)
            pending["done"].set()

    def _prove(self, jwt, jwk, salt, r, vk_u, t_max, hints) -> dict:
        cfg = self.pk.config
        try:
            stid, aud, iss = (claim_get(jwt, c).value for c in (cfg.stid_claim, "aud", "iss"))
            zkaddr = derive_address(stid, aud, iss, salt, cfg)
            public = PublicInputs(jwk.n, iss, zkaddr, t_max, vk_u, jwt.header_b64)
            ckt = self.pk.circuit
            z = fill_witness(ckt, WitnessBundle(jwt, salt, r, {k: tuple(v) for k, v in hints.items()}),
                             public)
            proof = backends.prove(self.pk.backend, ckt.cs, z)
        except UnsatisfiedWitness as exc:
            raise HttpError(400, f"witness rejected in {exc.violation.label}") from exc
        except (ClaimAbsent, ClaimNested, JwtMalformed, ValueError, KeyError) as exc:
            raise HttpError(400, f"witness rejected: {exc}") from exc
        return {"proof": base64.b64encode(proof).decode(),
                "public_inputs": [hex(x) for x in public.vector(cfg)],
                "zkaddr": zkaddr.to_bytes(32, "little").hex(),
                "region_stats": ckt.cs.stats(depth=1)}


def make_handler(service):
    class Handler(BaseHTTPRequestHandler):
        server_version = "zklogin"

        def _send(self, status: int, obj: dict):
            data = json.dumps(obj).encode()
            self.send_response(status)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(data)))
            self.end_headers()
            self.wfile.write(data)

        def do_GET(self):
            if self.path == "/healthz":
                self._send(200, {"ok": True, "role": type(service).__name__})
            else:
                self._send(404, {"error": "not found"})

        def do_POST(self):
            try:
                n = int(self.headers.get("Content-Length", 0))
                try:
                    body = json.loads(self.rfile.read(n).decode("utf-8"))
                except (UnicodeDecodeError, json.JSONDecodeError) as exc:
                    raise HttpError(400, "body is not UTF-8 JSON") from exc
                if not isinstance(body, dict):
                    raise HttpError(400, "body must be a JSON object")
                self._send(200, service.handle(self.path, body))
            except HttpError as exc:
                self._send(exc.status, {"error": str(exc)})

        def log_message(self, fmt, *args):
            log.info("%s %s", self.address_string(), fmt % args)

    return Handler


def serve(service, host: str = "127.0.0.1", port: int = 0) -> ThreadingHTTPServer:
    """Start a server in a daemon thread and return it (``server_address`` has the port)."""
    httpd = ThreadingHTTPServer((host, port), make_handler(service))
    httpd.daemon_threads = True
    threading.Thread(target=httpd.serve_forever, daemon=True).start()
    return httpd

