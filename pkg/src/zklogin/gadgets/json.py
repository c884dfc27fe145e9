"""Selective JSON parsing: per-character string/depth scan and single-claim extraction.

A claim slice looks like ``"key"<ws>:<ws>value<ws>`` followed by ``,`` or
``}``, where each ``<ws>`` run holds at most two of space, tab, LF, CR and
value is a JSON string or one of the literals true / false.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

from ..csys import LC, ONE, ConstraintSystem
from .core import (
    ByteVar,
    as_lc,
    assert_equal,
    assert_zero,
    boolean,
    decompose,
    is_zero,
    mask_point,
    mul,
    one_hot,
    prefix_mask,
    select,
)
from .slicing import g_slice_packed, shift_left

QUOTE, BACKSLASH, LBRACE, RBRACE = 34, 92, 123, 125
COLON, COMMA = 58, 44
WS_MAX = 2


@dataclass
class Scan:
    """Per-position state before each character of the scanned text."""

    in_string: list   # variables / LCs: 1 iff position k lies inside a string
    depth: list       # brace depth before position k
    eff_quote: list   # 1 iff S[k] is an unescaped quote

    def code(self, k: int) -> LC:
        return as_lc(self.depth[k]) * 2 + as_lc(self.in_string[k])


def json_scan(cs: ConstraintSystem, S: Sequence) -> Scan:
    """String state and brace depth for every position of S.

    A quote toggles the string state unless escaped by a preceding
    unescaped backslash; braces count only outside strings.
    """
    with cs.region("scan"):
        instr = [LC()]
        depth = [LC()]
        effq = []
        esc = LC()
        for k, c in enumerate(S):
            c = as_lc(c)
            isq = is_zero(cs, c - QUOTE)
            isbs = is_zero(cs, c - BACKSLASH)
            op = is_zero(cs, c - LBRACE)
            cl = is_zero(cs, c - RBRACE)
            eq = mul(cs, LC({isq: 1}), LC({ONE: 1}) - esc)
            effq.append(eq)
            nesc = mul(cs, LC({isbs: 1}), LC({ONE: 1}) - esc)
            esc = LC({nesc: 1})
            cur = instr[-1]
            ns = cs.alloc()
            # ns = cur xor eq
            cs.enforce(cur * 2, LC({eq: 1}), cur + LC({eq: 1, ns: -1}), solve=ns)
            instr.append(LC({ns: 1}))
            nd = cs.alloc()
            cs.enforce(LC({op: 1, cl: -1}), LC({ONE: 1}) - cur, LC({nd: 1}) - depth[-1], solve=nd)
            depth.append(LC({nd: 1}))
    return Scan(instr, depth, effq)


def g_top_level(cs: ConstraintSystem, S: Sequence, pos, scan: Scan | None = None) -> None:
    """Position ``pos`` is outside any string at brace depth exactly 1."""
    if scan is None:
        scan = json_scan(cs, S)
    with cs.region("top_level"):
        sel_vars = one_hot(cs, as_lc(pos), len(S))
        picked = select(cs, sel_vars, [scan.code(k) for k in range(len(S))])
        assert_equal(cs, picked, 2)


@dataclass
class Claim:
    key: list          # LCs of the key bytes including quotes (length m; zero past the key)
    value: list        # ByteVars of the value content (quotes stripped), zero past value_len
    value_len: int     # variable
    is_bool: LC        # 1 for true/false literals, 0 for strings
    is_true: int       # variable
    slice: list        # the m sliced bytes


def claim_width(key_len: int, max_value: int) -> int:
    """Slice width holding key, colon, quoted value, delimiter and whitespace."""
    return key_len + 1 + 3 * WS_MAX + max_value + 2 + 1


def _positions_hint(m: int, key_len: int | None):
    def fill(*vals):
        t = [int(x) for x in vals[:m]]
        _l, j = int(vals[m]), int(vals[m + 1])
        if key_len is not None:
            kl = key_len
        else:
            kl = 1
            while kl < m and not (t[kl] == QUOTE and t[kl - 1] != BACKSLASH):
                kl += 1
            kl += 1
        vs = j + 1
        while vs < m and t[vs] in (32, 9, 10, 13):
            vs += 1
        is_true = is_false = 0
        ve = vs
        if vs < m and t[vs] == QUOTE:
            ve = vs + 1
            escaped = False
            while ve < m:
                ch = t[ve]
                if ch == QUOTE and not escaped:
                    break
                escaped = ch == BACKSLASH and not escaped
                ve += 1
            ve += 1
        elif bytes(t[vs:vs + 4]) == b"true":
            is_true, ve = 1, vs + 4
        elif bytes(t[vs:vs + 5]) == b"false":
            is_false, ve = 1, vs + 5
        return [kl, vs, min(ve, m), is_true, is_false]
    return fill


def _small_set(cs, d: LC) -> None:
    # d in {0, 1, 2}
    t = mul(cs, d, d - 1)
    cs.enforce(LC({t: 1}), d - 2, LC())


def g_json_claim(cs: ConstraintSystem, S: Sequence, i, l, j, *, max_value: int,
                 key: bytes | None = None, max_key: int | None = None,
                 kind: str | None = None, slicer=g_slice_packed) -> Claim:
    """Extract and check the claim S[i : i + l] whose colon sits at offset j.

    ``key`` pins the literal key text, quotes included (``b'"sub"'``);
    without it the key is any quoted string of at most ``max_key`` bytes.
    ``kind`` may force ``"string"`` or ``"boolean"``. Offsets ``i, l, j`` are
    hints chosen by the prover; every property is re-checked here.
    """
    if key is None and max_key is None:
        raise ValueError("need a literal key or max_key")
    klen = len(key) if key is not None else max_key
    m = claim_width(klen, max_value)
    i, l, j = as_lc(i), as_lc(l), as_lc(j)
    with cs.region("claim"):
        padded = list(S) + [LC()] * m
        T = [as_lc(x) for x in slicer(cs, padded, i, m)]
        kl_v, vs_v, ve_v, t_v, f_v = cs.hint(
            _positions_hint(m, len(key) if key is not None else None), T + [l, j], 5)
        kl = LC.const(len(key)) if key is not None else LC({kl_v: 1})
        vs, ve = LC({vs_v: 1}), LC({ve_v: 1})
        if key is not None:
            assert_equal(cs, kl, LC({kl_v: 1}))

        # character classes and local escape chain
        isq, effq = [], []
        esc = LC()
        for c in T:
            q = is_zero(cs, c - QUOTE)
            bs = is_zero(cs, c - BACKSLASH)
            isq.append(q)
            effq.append(LC({mul(cs, LC({q: 1}), LC({ONE: 1}) - esc): 1}))
            esc = LC({mul(cs, LC({bs: 1}), LC({ONE: 1}) - esc): 1})

        # key
        if key is not None:
            for k, ch in enumerate(key):
                assert_equal(cs, T[k], ch)
            mk = [1 if k < len(key) else 0 for k in range(m)]
        else:
            mkv = prefix_mask(cs, kl, m)
            mk = [LC({v: 1}) for v in mkv]
            decompose(cs, kl - 2, max(1, m.bit_length()))
            assert_equal(cs, T[0], QUOTE)
            for k in range(1, m):
                at_end = mask_point(mkv, k + 1)
                # closing quote at kl-1 is unescaped; no unescaped quote strictly inside
                cs.enforce(at_end, effq[k] - 1, LC())
                inner = as_lc(mk[k]) - at_end
                cs.enforce(inner, effq[k], LC())

        mj = prefix_mask(cs, j, m)
        mv = prefix_mask(cs, vs, m)
        me = prefix_mask(cs, ve, m)
        ml = prefix_mask(cs, l - 1, m - 1)

        # whitespace run lengths and ordering kl <= j < vs <= ve <= l-1 < m
        _small_set(cs, j - kl)
        _small_set(cs, vs - j - 1)
        _small_set(cs, l - 1 - ve)

        def at(mask, k):
            return mask_point(mask, k)

        is_true, is_false = t_v, f_v
        boolean(cs, is_true)
        boolean(cs, is_false)
        cs.enforce(LC({is_true: 1}), LC({is_false: 1}), LC())
        isb = LC({is_true: 1, is_false: 1})
        if kind == "string":
            assert_zero(cs, isb)
        elif kind == "boolean":
            assert_equal(cs, isb, 1)

        delim = LC()
        for k in range(m):
            c = T[k]
            a_j = at(mj, k)
            cs.enforce(a_j, c - COLON, LC())
            mjk = as_lc(LC({mj[k]: 1}))
            ws = (mjk - as_lc(mk[k])) + (LC({mv[k]: 1}) - mjk - a_j)
            if k < m - 1:
                ws = ws + LC({ml[k]: 1, me[k]: -1})
            else:
                ws = ws - LC({me[k]: 1})
            if any(v != ONE for v in ws):
                p1 = mul(cs, c - 32, c - 9)
                p2 = mul(cs, LC({p1: 1}), c - 10)
                w2 = mul(cs, ws, LC({p2: 1}))
                cs.enforce(LC({w2: 1}), c - 13, LC())
            a_vs = at(mv, k)
            a_ve1 = LC({me[k]: 1}) - (LC({me[k + 1]: 1}) if k + 1 < m else LC())
            cs.enforce(a_vs, effq[k] + isb - 1, LC())
            cs.enforce(a_ve1, effq[k] + isb - 1, LC())
            inner = LC({me[k]: 1, mv[k]: -1}) - a_vs - a_ve1
            cs.enforce(inner, effq[k], LC())
            delim[mul(cs, at(ml, k), c)] = 1
        cs.enforce(delim - COMMA, delim - RBRACE, LC())

        # value content, shifted to the front
        shift = vs + 1 - isb
        sh_bits = decompose(cs, shift, max(1, (m - 1).bit_length()))
        moved = shift_left(cs, T, sh_bits, max_value)
        clen = cs.alloc()
        cs.enforce(ve - vs - 2 + isb * 2, LC.const(1), LC({clen: 1}), solve=clen)
        mc = prefix_mask(cs, LC({clen: 1}), max_value)
        value = [ByteVar(mul(cs, moved[k], LC({mc[k]: 1}))) for k in range(max_value)]
        for k, ch in enumerate(b"true"):
            cs.enforce(LC({is_true: 1}), moved[k] - ch, LC())
        for k, ch in enumerate(b"false"):
            cs.enforce(LC({is_false: 1}), moved[k] - ch, LC())
        cs.enforce(LC({is_true: 1}), LC({clen: 1, ONE: -4}), LC())
        cs.enforce(LC({is_false: 1}), LC({clen: 1, ONE: -5}), LC())

        if key is not None:
            key_out = [LC.const(ch) for ch in key]
        else:
            key_out = [LC({mul(cs, T[k], as_lc(mk[k])): 1}) for k in range(m)]
    return Claim(key_out, value, clen, isb, is_true, T)
