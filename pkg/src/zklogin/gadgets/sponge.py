"""In-circuit version of the sponge in :mod:`zklogin.sponge`."""

from __future__ import annotations

from collections.abc import Sequence

from ..csys import LC, ConstraintSystem
from ..field import P
from ..sponge import MDS, RATE, ROUND_CONSTANTS, initial_state, is_full_round
from .core import as_lc, materialize, mul


def _pow5(cs: ConstraintSystem, x: LC) -> LC:
    x2 = mul(cs, x, x)
    x4 = mul(cs, LC({x2: 1}), LC({x2: 1}))
    return LC({mul(cs, LC({x4: 1}), x): 1})


def _mix(state: list) -> list:
    out = []
    for row in MDS:
        acc = LC()
        for w, s in zip(row, state):
            for v, c in s.items():
                acc[v] = (acc.get(v, 0) + w * c) % P
        out.append(acc)
    return out


def g_permute(cs: ConstraintSystem, state: Sequence) -> list:
    """Permutation on three LCs; 3 constraints per S-box, 243 in all."""
    s = [as_lc(x) for x in state]
    for r, rc in enumerate(ROUND_CONSTANTS):
        s = [x + c for x, c in zip(s, rc)]
        if is_full_round(r):
            s = [_pow5(cs, x) for x in s]
        else:
            s[0] = _pow5(cs, s[0])
        s = _mix(s)
    return s


def g_sponge_hash(cs: ConstraintSystem, inputs: Sequence, tag: int) -> int:
    """Variable equal to ``sponge_hash(inputs, tag)``."""
    xs = [as_lc(x) for x in inputs]
    with cs.region("sponge"):
        s = [LC.const(c) for c in initial_state(tag, len(xs))]
        if not xs:
            return materialize(cs, g_permute(cs, s)[1])
        for k in range(0, len(xs), RATE):
            for off, x in enumerate(xs[k:k + RATE]):
                s[1 + off] = s[1 + off] + x
            s = g_permute(cs, s)
            if k + RATE < len(xs):
                s = [LC({materialize(cs, x): 1}) for x in s]
        return materialize(cs, s[1])
