"""Pure-Python evaluation core; same interface as the compiled ``_ckernel``."""

from __future__ import annotations

P = 21888242871839275222246405745257275088548364400416034343698204186575808495617

OP_SOLVE = 1
OP_BITS = 2
OP_INV = 3
OP_HINT = 4

IMPLEMENTATION = "python"


class Buffer:
    """Assignment storage as a flat list of canonical integers."""

    __slots__ = ("n", "vals")

    def __init__(self, n: int):
        self.n = n
        self.vals = [0] * n

    def __len__(self):
        return self.n

    def __getitem__(self, i):
        if i < 0 or i >= self.n:
            raise IndexError(i)
        return self.vals[i]

    def __setitem__(self, i, x):
        if i < 0 or i >= self.n:
            raise IndexError(i)
        self.vals[i] = x % P

    def set_many(self, start, values):
        for k, x in enumerate(values):
            if start + k >= self.n:
                raise IndexError(start + k)
            self.vals[start + k] = x % P

    def get_many(self, start, stop):
        return self.vals[start:stop]

    def copy(self):
        out = Buffer(self.n)
        out.vals = list(self.vals)
        return out

    def to_bytes(self, start, stop):
        return b"".join(v.to_bytes(32, "little") for v in self.vals[start:stop])

    def load_bytes(self, start, data):
        data = bytes(data)
        if len(data) % 32 or start + len(data) // 32 > self.n:
            raise ValueError("bad witness encoding length")
        for i in range(len(data) // 32):
            x = int.from_bytes(data[32 * i:32 * i + 32], "little")
            if x >= P:
                raise ValueError("non-canonical field element")
            self.vals[start + i] = x


class Engine:
    def __init__(self, nvars, coefs, lc_ptr, lc_var, lc_coef, lc_const,
                 con_a, con_b, con_c, t_kind, t_out, t_a, t_b, t_c, hints):
        self.nvars = nvars
        self.coefs = list(coefs)
        ptr = [int(x) for x in lc_ptr]
        var = [int(x) for x in lc_var]
        cf = [self.coefs[int(x)] for x in lc_coef]
        # Pre-split each LC into (const, [(var, coef), ...]).
        self._lcs = [
            (self.coefs[int(lc_const[i])], list(zip(var[ptr[i]:ptr[i + 1]], cf[ptr[i]:ptr[i + 1]])))
            for i in range(len(lc_const))
        ]
        self.con_a = [int(x) for x in con_a]
        self.con_b = [int(x) for x in con_b]
        self.con_c = [int(x) for x in con_c]
        self.tape = list(zip(*(list(map(int, t)) for t in (t_kind, t_out, t_a, t_b, t_c))))
        self.hints = hints
        self.ncons = len(self.con_a)
        self.nlc = len(self._lcs)
        self.ntape = len(self.tape)

    def new_buffer(self):
        return Buffer(self.nvars)

    def _lc(self, vals, lc):
        const, terms = self._lcs[lc]
        acc = const
        for v, c in terms:
            acc += c * vals[v]
        return acc % P

    def eval_lc(self, buf, lc):
        return self._lc(buf.vals, lc)

    def _holds(self, vals, i):
        a = self._lc(vals, self.con_a[i])
        b = self._lc(vals, self.con_b[i])
        return (a * b - self._lc(vals, self.con_c[i])) % P == 0

    def holds(self, buf, i):
        return self._holds(buf.vals, i)

    def first_violation(self, buf, start=0, stop=-1):
        if stop < 0 or stop > self.ncons:
            stop = self.ncons
        vals = buf.vals
        for i in range(start, stop):
            if not self._holds(vals, i):
                return i
        return -1

    def violation_in(self, buf, order):
        vals = buf.vals
        for i in order:
            if not self._holds(vals, int(i)):
                return int(i)
        return -1

    def solve(self, buf, start=0, stop=-1):
        if stop < 0 or stop > self.ntape:
            stop = self.ntape
        vals = buf.vals
        lc = self._lc
        for kind, v, a, b, c in self.tape[start:stop]:
            if kind == OP_SOLVE:
                av = lc(vals, self.con_a[a])
                bv = lc(vals, self.con_b[a])
                vals[v] = ((av * bv - lc(vals, b)) * self.coefs[c]) % P
            elif kind == OP_BITS:
                x = lc(vals, a)
                for j in range(c):
                    vals[v + j] = (x >> j) & 1
            elif kind == OP_INV:
                x = lc(vals, a)
                vals[v] = pow(x, -1, P) if x else 0
            elif kind == OP_HINT:
                fn, ins, outs = self.hints[a]
                res = fn(*[lc(vals, i) for i in ins])
                for j, x in zip(outs, res):
                    vals[j] = x % P
