"""Rank-1 constraint systems with region accounting and a witness-solving tape.

Constraints are flattened into integer arrays as they are enforced, so a
million-constraint circuit costs tens of megabytes rather than millions of
Python dictionaries. Witness generation is recorded next to the constraints
as a tape of small instructions that the evaluation kernel replays.
"""

from __future__ import annotations

import hashlib
import struct
from array import array
from bisect import bisect_right
from collections.abc import Callable, Iterable, Sequence
from contextlib import contextmanager
from dataclasses import dataclass

import numpy as np

from . import kernel
from .field import P
from .sponge import Domain, sponge_hash

ONE = -1  # key of the constant term inside a LinearCombination


class UnallocatedVariable(IndexError):
    pass


class LengthMismatch(ValueError):
    pass


class AllocationOrderError(RuntimeError):
    pass


class LinearCombination(dict):
    """Sparse map variable -> coefficient; key ``ONE`` holds the constant."""

    __slots__ = ()

    @classmethod
    def var(cls, v: int, coef: int = 1) -> LinearCombination:
        return cls({v: coef})

    @classmethod
    def const(cls, c: int) -> LinearCombination:
        return cls({ONE: c}) if c % P else cls()

    @classmethod
    def of(cls, x) -> LinearCombination:
        if isinstance(x, LinearCombination):
            return x
        if isinstance(x, int):
            return cls.const(x)
        raise TypeError(f"cannot build a linear combination from {type(x).__name__}")

    def copy(self) -> LinearCombination:
        return LinearCombination(self)

    def _merge(self, other, sign: int) -> LinearCombination:
        out = LinearCombination(self)
        if isinstance(other, int):
            out[ONE] = out.get(ONE, 0) + sign * other
            return out
        for v, c in other.items():
            out[v] = out.get(v, 0) + sign * c
        return out

    def __add__(self, other):
        return self._merge(other, 1)

    __radd__ = __add__

    def __sub__(self, other):
        return self._merge(other, -1)

    def __rsub__(self, other):
        return (-self)._merge(other, 1)

    def __neg__(self):
        return LinearCombination({v: -c for v, c in self.items()})

    def __mul__(self, k):
        if not isinstance(k, int):
            return NotImplemented
        return LinearCombination({v: c * k for v, c in self.items()})

    __rmul__ = __mul__

    def evaluate(self, values) -> int:
        acc = 0
        for v, c in self.items():
            acc += c if v == ONE else c * values[v]
        return acc % P

    def constant_value(self):
        """The value if no variable appears (after cancellation), else None."""
        for v, c in self.items():
            if v != ONE and c % P:
                return None
        return self.get(ONE, 0) % P


LC = LinearCombination


def lc_sum(terms: Iterable) -> LinearCombination:
    out = LinearCombination()
    for t in terms:
        if isinstance(t, int):
            out[ONE] = out.get(ONE, 0) + t
        else:
            for v, c in t.items():
                out[v] = out.get(v, 0) + c
    return out


def lc_weighted(vars_: Sequence[int], weights: Sequence[int]) -> LinearCombination:
    out = LinearCombination()
    for v, w in zip(vars_, weights):
        out[v] = out.get(v, 0) + w
    return out


@dataclass(frozen=True)
class Violation:
    index: int
    label: str

    def __bool__(self):
        return False


class _Ok:
    _inst = None

    def __new__(cls):
        if cls._inst is None:
            cls._inst = super().__new__(cls)
        return cls._inst

    def __bool__(self):
        return True

    def __repr__(self):
        return "Ok"


OK = _Ok()

OP_SOLVE, OP_BITS, OP_INV, OP_HINT = kernel.OP_SOLVE, kernel.OP_BITS, kernel.OP_INV, kernel.OP_HINT


class ConstraintSystem:
    """Builder for an R1CS instance; ``compile()`` freezes it for evaluation."""

    def __init__(self):
        self.num_public = 0
        self.num_vars = 0
        self._coef_index = {0: 0, 1: 1}
        self.coefs = [0, 1]
        self.lc_ptr = array("q", [0])
        self.lc_var = array("i")
        self.lc_coef = array("i")
        self.lc_const = array("i")
        self.con_a = array("i")
        self.con_b = array("i")
        self.con_c = array("i")
        self.t_kind = array("B")
        self.t_out = array("i")
        self.t_a = array("i")
        self.t_b = array("i")
        self.t_c = array("i")
        self.hints: list = []
        self._stack: list = []
        self._path = ""
        self._runs_start = array("q")
        self._runs_label: list = []
        self._compiled = None
        self._lc_zero = None
        self._lc_one = None
        self._inv_cache: dict = {}

    # -- allocation ---------------------------------------------------------

    @property
    def num_witness(self) -> int:
        return self.num_vars - self.num_public

    @property
    def num_constraints(self) -> int:
        return len(self.con_a)

    def alloc(self, public: bool = False) -> int:
        if public:
            if self.num_public != self.num_vars:
                raise AllocationOrderError("public variables must precede witness variables")
            self.num_public += 1
        self.num_vars += 1
        return self.num_vars - 1

    def alloc_many(self, n: int, public: bool = False) -> list:
        return [self.alloc(public) for _ in range(n)]

    # -- linear combinations --------------------------------------------------

    def _coef(self, c: int) -> int:
        idx = self._coef_index.get(c)
        if idx is None:
            idx = len(self.coefs)
            self._coef_index[c] = idx
            self.coefs.append(c)
        return idx

    def add_lc(self, lc) -> int:
        """Append a linear combination to the pool; returns its id."""
        if not isinstance(lc, dict):
            lc = LinearCombination.of(lc)
        n = len(lc)
        if n == 0:
            if self._lc_zero is None:
                self._lc_zero = self._push_lc(())
            return self._lc_zero
        if n == 1 and lc.get(ONE) == 1:
            if self._lc_one is None:
                self._lc_one = self._push_lc(((ONE, 1),))
            return self._lc_one
        return self._push_lc(sorted(lc.items()))

    def _push_lc(self, items) -> int:
        ci = self._coef_index
        lv, lk = self.lc_var, self.lc_coef
        nv = self.num_vars
        const = 0
        for v, c in items:
            if v < 0:
                const = c % P
                continue
            if c != 1:
                c %= P
                if not c:
                    continue
                k = ci.get(c)
                if k is None:
                    k = self._coef(c)
            else:
                k = 1
            if v >= nv:
                raise UnallocatedVariable(v)
            lv.append(v)
            lk.append(k)
        k = ci.get(const)
        self.lc_const.append(k if k is not None else self._coef(const))
        self.lc_ptr.append(len(lv))
        return len(self.lc_const) - 1

    # -- constraints -----------------------------------------------------------

    def enforce(self, a, b, c, solve: int | None = None) -> int:
        """Append the constraint a * b = c and return its index.

        With ``solve=v`` the witness tape computes v from this constraint; v
        must appear only in ``c`` and with a nonzero coefficient.
        """
        ia = self.add_lc(a)
        ib = self.add_lc(b)
        ic = self.add_lc(c)
        idx = len(self.con_a)
        self.con_a.append(ia)
        self.con_b.append(ib)
        self.con_c.append(ic)
        if not self._runs_label or self._runs_label[-1] != self._path:
            self._mark_run()
        if solve is not None:
            if solve in a or solve in b:
                raise ValueError("solved variable must only appear in C")
            k = c.get(solve, 0) % P
            if not k:
                raise ValueError("solved variable has zero coefficient in C")
            rest = LinearCombination(c)
            del rest[solve]
            inv = self._inv_cache.get(k)
            if inv is None:
                inv = self._inv_cache[k] = pow(k, P - 2, P)
            self._tape(OP_SOLVE, solve, idx, self.add_lc(rest), self._coef(inv))
        self._compiled = None
        return idx

    def _mark_run(self):
        self._runs_start.append(len(self.con_a) - 1)
        self._runs_label.append(self._path)

    def _tape(self, kind, out, a=0, b=0, c=0):
        self.t_kind.append(kind)
        self.t_out.append(out)
        self.t_a.append(a)
        self.t_b.append(b)
        self.t_c.append(c)
        self._compiled = None

    def bits(self, lc, k: int) -> list:
        """Allocate k witness variables filled with the low k bits of ``lc``.

        No constraints are added; callers enforce booleanity and recomposition.
        """
        src = self.add_lc(lc)
        first = self.num_vars
        out = self.alloc_many(k)
        self._tape(OP_BITS, first, src, 0, k)
        return out

    def inverse(self, lc) -> int:
        """Witness variable holding 1/lc (0 when lc is 0); unconstrained."""
        src = self.add_lc(lc)
        v = self.alloc()
        self._tape(OP_INV, v, src)
        return v

    def hint(self, fn: Callable, inputs: Sequence, n_out: int) -> list:
        """Witness variables computed by ``fn(*input_values)``; unconstrained."""
        ids = tuple(self.add_lc(x) for x in inputs)
        outs = self.alloc_many(n_out)
        self.hints.append((fn, ids, tuple(outs)))
        self._tape(OP_HINT, outs[0] if outs else -1, len(self.hints) - 1)
        return outs

    # -- regions ---------------------------------------------------------------

    @contextmanager
    def _region_ctx(self, label: str):
        if "/" in label:
            raise ValueError("region labels may not contain '/'")
        self._stack.append(label)
        self._path = "/".join(self._stack)
        try:
            yield
        finally:
            self._stack.pop()
            self._path = "/".join(self._stack)

    def region(self, label: str, body: Callable | None = None):
        """Label constraints added inside. Use as ``with cs.region(l):`` or
        ``cs.region(l, fn)`` which runs ``fn()`` and returns its result."""
        if body is None:
            return self._region_ctx(label)
        with self._region_ctx(label):
            return body()

    def label_of(self, index: int) -> str:
        k = bisect_right(self._runs_start, index) - 1
        return self._runs_label[k] if k >= 0 else ""

    def stats(self, depth: int | None = None) -> dict:
        """Constraint counts per label path (leaf paths unless ``depth`` given).

        Counts always sum to the number of constraints; unlabeled constraints
        are reported under the empty path.
        """
        counts: dict = {}
        total = self.num_constraints
        starts = list(self._runs_start)
        bounds = starts[1:] + [total]
        for s, e, label in zip(starts, bounds, self._runs_label):
            if depth is not None and label:
                label = "/".join(label.split("/")[:depth])
            if e > s:
                counts[label] = counts.get(label, 0) + (e - s)
        return counts

    def share(self, prefix: str) -> float:
        total = self.num_constraints
        if not total:
            return 0.0
        n = sum(v for k, v in self.stats().items() if k == prefix or k.startswith(prefix + "/"))
        return n / total

    # -- evaluation ------------------------------------------------------------

    def compile(self) -> CompiledSystem:
        if self._compiled is None:
            self._compiled = CompiledSystem(self)
        return self._compiled

    def new_assignment(self) -> Assignment:
        return Assignment(self, self.compile().engine.new_buffer())

    def solve(self, z: Assignment) -> Assignment:
        self.compile().engine.solve(z.buf)
        return z

    def satisfied(self, z: Assignment):
        return self.compile().satisfied(z)

    def digest(self) -> bytes:
        return self.compile().digest

    def public_inputs(self, z: Assignment) -> list:
        return z.buf.get_many(0, self.num_public)


def _np(arr, dtype):
    if len(arr) == 0:
        return np.zeros(0, dtype=dtype)
    return np.frombuffer(arr, dtype=dtype).copy()


class CompiledSystem:
    """Frozen evaluation view of a ConstraintSystem."""

    def __init__(self, cs: ConstraintSystem):
        self.cs = cs
        self.num_public = cs.num_public
        self.num_vars = cs.num_vars
        self.num_constraints = cs.num_constraints
        self.lc_ptr = _np(cs.lc_ptr, np.int64)
        self.lc_var = _np(cs.lc_var, np.int32)
        self.lc_coef = _np(cs.lc_coef, np.int32)
        self.lc_const = _np(cs.lc_const, np.int32)
        self.con_a = _np(cs.con_a, np.int32)
        self.con_b = _np(cs.con_b, np.int32)
        self.con_c = _np(cs.con_c, np.int32)
        self.engine = self.make_engine(kernel)
        self._digest = None
        self._public_first = None

    def make_engine(self, impl):
        """Evaluation engine from ``impl`` (the selected kernel, or one from ``kernel.load``)."""
        cs = self.cs
        return impl.Engine(
            cs.num_vars, list(cs.coefs), self.lc_ptr, self.lc_var, self.lc_coef,
            self.lc_const, self.con_a, self.con_b, self.con_c,
            _np(cs.t_kind, np.uint8), _np(cs.t_out, np.int32), _np(cs.t_a, np.int32),
            _np(cs.t_b, np.int32), _np(cs.t_c, np.int32), list(cs.hints),
        )

    @property
    def public_first_order(self) -> np.ndarray:
        """Constraint indices touching a public variable first, then the rest."""
        if self._public_first is None:
            n_lc = len(self.lc_const)
            touches = np.zeros(n_lc, dtype=bool)
            if len(self.lc_var):
                counts = np.diff(self.lc_ptr)
                owner = np.repeat(np.arange(n_lc), counts)
                hit = owner[self.lc_var < self.num_public]
                touches[hit] = True
            mask = touches[self.con_a] | touches[self.con_b] | touches[self.con_c]
            idx = np.arange(self.num_constraints, dtype=np.int32)
            self._public_first = np.ascontiguousarray(
                np.concatenate([idx[mask], idx[~mask]]).astype(np.int32))
        return self._public_first

    def satisfied(self, z: Assignment):
        if len(z.buf) != self.num_vars:
            raise LengthMismatch(f"assignment has {len(z.buf)} values, expected {self.num_vars}")
        i = self.engine.first_violation(z.buf)
        if i < 0:
            return OK
        return Violation(i, self.cs.label_of(i))

    def holds_all(self, buf) -> bool:
        """Any-order check (public-touching constraints first, early exit)."""
        return self.engine.violation_in(buf, self.public_first_order) < 0

    def serialize(self) -> bytes:
        head = struct.pack(
            "<8Q", self.num_public, self.num_vars, self.num_constraints,
            len(self.lc_const), len(self.lc_var), len(self.cs.coefs), 0, 0)
        coefs = b"".join(c.to_bytes(32, "little") for c in self.cs.coefs)
        parts = [head, coefs]
        for arr, dt in ((self.lc_ptr, "<i8"), (self.lc_var, "<i4"), (self.lc_coef, "<i4"),
                        (self.lc_const, "<i4"), (self.con_a, "<i4"), (self.con_b, "<i4"),
                        (self.con_c, "<i4")):
            parts.append(arr.astype(dt).tobytes())
        return b"".join(parts)

    @property
    def digest(self) -> bytes:
        """SHA-256 of the canonical serialization, absorbed into the sponge."""
        if self._digest is None:
            h = hashlib.sha256(self.serialize()).digest()
            v = sponge_hash([int.from_bytes(h[:16], "big"), int.from_bytes(h[16:], "big")],
                            Domain.CSYS)
            self._digest = v.to_bytes(32, "little")
        return self._digest


class Assignment:
    """Values for every variable: public prefix, then witness suffix."""

    def __init__(self, cs: ConstraintSystem, buf):
        self.cs = cs
        self.buf = buf

    def __len__(self):
        return len(self.buf)

    def __getitem__(self, i):
        return self.buf[i]

    def __setitem__(self, i, x):
        self.buf[i] = x

    def set_many(self, vars_: Sequence[int], values: Iterable[int]):
        b = self.buf
        for v, x in zip(vars_, values):
            b[v] = x

    def get_many(self, vars_: Sequence[int]) -> list:
        b = self.buf
        return [b[v] for v in vars_]

    @property
    def public(self) -> list:
        return self.buf.get_many(0, self.cs.num_public)

    @property
    def values(self) -> list:
        return self.buf.get_many(0, len(self.buf))

    def copy(self) -> Assignment:
        return Assignment(self.cs, self.buf.copy())

    @classmethod
    def from_values(cls, cs: ConstraintSystem, values: Sequence[int]) -> Assignment:
        if len(values) != cs.num_vars:
            raise LengthMismatch(f"assignment has {len(values)} values, expected {cs.num_vars}")
        z = cs.new_assignment()
        z.buf.set_many(0, values)
        return z
