# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled evaluation core for rank-1 constraint systems.

Values live in a uint64 array with a side table of arbitrary-precision
integers for entries that do not fit. Linear combinations are evaluated
exactly in 128-bit signed arithmetic with overflow detection; anything
that overflows, or touches a large coefficient or value, is recomputed
with Python integers modulo the field prime.
"""

from libc.stdint cimport uint64_t, int64_t, int32_t, uint8_t
from libc.stdlib cimport malloc, free
from libc.string cimport memset, memcpy

import numpy as np

cdef extern from *:
    """
    typedef __int128 zk_i128;

    static inline int zk_add_ovf(zk_i128 a, zk_i128 b, zk_i128 *r) {
        return __builtin_add_overflow(a, b, r);
    }
    static inline int zk_mul_ovf(zk_i128 a, zk_i128 b, zk_i128 *r) {
        return __builtin_mul_overflow(a, b, r);
    }
    static inline zk_i128 zk_from_u64(uint64_t v) { return (zk_i128)v; }
    static inline zk_i128 zk_from_parts(int64_t hi, uint64_t lo) {
        return (zk_i128)(((unsigned __int128)(uint64_t)hi << 64) | lo);
    }
    static inline int64_t zk_hi(zk_i128 v) { return (int64_t)(v >> 64); }
    static inline uint64_t zk_lo(zk_i128 v) { return (uint64_t)v; }
    static inline int zk_is_u64(zk_i128 v) { return v >= 0 && (v >> 64) == 0; }
    static inline int zk_eq(zk_i128 a, zk_i128 b) { return a == b; }
    static inline zk_i128 zk_sub(zk_i128 a, zk_i128 b, int *ovf) {
        zk_i128 r; *ovf |= __builtin_sub_overflow(a, b, &r); return r;
    }
    static inline zk_i128 zk_zero(void) { return 0; }
    """
    ctypedef struct zk_i128:
        pass
    int zk_add_ovf(zk_i128 a, zk_i128 b, zk_i128 *r) nogil
    int zk_mul_ovf(zk_i128 a, zk_i128 b, zk_i128 *r) nogil
    zk_i128 zk_from_u64(uint64_t v) nogil
    zk_i128 zk_from_parts(int64_t hi, uint64_t lo) nogil
    int64_t zk_hi(zk_i128 v) nogil
    uint64_t zk_lo(zk_i128 v) nogil
    int zk_is_u64(zk_i128 v) nogil
    int zk_eq(zk_i128 a, zk_i128 b) nogil
    zk_i128 zk_sub(zk_i128 a, zk_i128 b, int *ovf) nogil
    zk_i128 zk_zero() nogil

DEF OP_SOLVE = 1
DEF OP_BITS = 2
DEF OP_INV = 3
DEF OP_HINT = 4

cdef object _P = 21888242871839275222246405745257275088548364400416034343698204186575808495617
cdef object _MASK64 = (1 << 64) - 1
cdef object _LIMIT = 1 << 126

IMPLEMENTATION = "cython"


cdef inline object _to_py(zk_i128 v):
    return (<object>zk_hi(v) << 64) | <object>zk_lo(v)


cdef class Buffer:
    """Assignment storage: small values inline, large ones in a Python list."""

    cdef uint64_t *sv
    cdef uint8_t *big
    cdef public list bv
    cdef readonly Py_ssize_t n

    def __cinit__(self, Py_ssize_t n):
        self.n = n
        self.sv = <uint64_t *>malloc(max(n, 1) * sizeof(uint64_t))
        self.big = <uint8_t *>malloc(max(n, 1) * sizeof(uint8_t))
        if self.sv == NULL or self.big == NULL:
            raise MemoryError()
        memset(self.sv, 0, max(n, 1) * sizeof(uint64_t))
        memset(self.big, 0, max(n, 1) * sizeof(uint8_t))
        self.bv = [None] * n

    def __dealloc__(self):
        free(self.sv)
        free(self.big)

    def __len__(self):
        return self.n

    cdef inline void _set(self, Py_ssize_t i, object x):
        if 0 <= x <= _MASK64:
            self.sv[i] = <uint64_t>x
            if self.big[i]:
                self.big[i] = 0
                self.bv[i] = None
        else:
            x = x % _P
            if x <= _MASK64:
                self.sv[i] = <uint64_t>x
                if self.big[i]:
                    self.big[i] = 0
                    self.bv[i] = None
            else:
                self.big[i] = 1
                self.bv[i] = x

    cdef inline object _get(self, Py_ssize_t i):
        if self.big[i]:
            return self.bv[i]
        return <object>self.sv[i]

    def __getitem__(self, Py_ssize_t i):
        if i < 0 or i >= self.n:
            raise IndexError(i)
        return self._get(i)

    def __setitem__(self, Py_ssize_t i, x):
        if i < 0 or i >= self.n:
            raise IndexError(i)
        self._set(i, x)

    def set_many(self, Py_ssize_t start, values):
        cdef Py_ssize_t i = start
        for x in values:
            if i >= self.n:
                raise IndexError(i)
            self._set(i, x)
            i += 1

    def get_many(self, Py_ssize_t start, Py_ssize_t stop):
        return [self._get(i) for i in range(start, stop)]

    def copy(self):
        cdef Buffer out = Buffer(self.n)
        memcpy(out.sv, self.sv, self.n * sizeof(uint64_t))
        memcpy(out.big, self.big, self.n * sizeof(uint8_t))
        out.bv = list(self.bv)
        return out

    def to_bytes(self, Py_ssize_t start, Py_ssize_t stop):
        """32-byte little-endian encoding of entries [start, stop)."""
        cdef Py_ssize_t i, k
        cdef uint64_t v
        cdef bytearray out = bytearray(32 * (stop - start))
        cdef unsigned char *p = out
        for i in range(start, stop):
            k = 32 * (i - start)
            if self.big[i]:
                p_bytes = (<object>self.bv[i]).to_bytes(32, "little")
                out[k:k + 32] = p_bytes
            else:
                v = self.sv[i]
                memcpy(p + k, &v, 8)
        return bytes(out)

    def load_bytes(self, Py_ssize_t start, const unsigned char[:] data):
        """Inverse of ``to_bytes``; non-canonical entries raise ValueError."""
        cdef Py_ssize_t count = data.shape[0] // 32
        cdef Py_ssize_t i, k, j
        cdef uint64_t v
        cdef bint high
        if data.shape[0] % 32 or start + count > self.n:
            raise ValueError("bad witness encoding length")
        for i in range(count):
            k = 32 * i
            high = False
            for j in range(8, 32):
                if data[k + j]:
                    high = True
                    break
            if high:
                x = int.from_bytes(bytes(data[k:k + 32]), "little")
                if x >= _P:
                    raise ValueError("non-canonical field element")
                self.big[start + i] = 1
                self.bv[start + i] = x
            else:
                memcpy(&v, &data[k], 8)
                self.sv[start + i] = v
                if self.big[start + i]:
                    self.big[start + i] = 0
                    self.bv[start + i] = None


cdef class Engine:
    """Evaluates a frozen constraint system and its witness-solving tape."""

    cdef readonly Py_ssize_t nvars, ncons, nlc, ntape
    cdef list coefs
    cdef zk_i128 *coef_s
    cdef uint8_t *coef_big
    cdef int64_t[:] lc_ptr
    cdef int32_t[:] lc_var, lc_coef, lc_const
    cdef int32_t[:] con_a, con_b, con_c
    cdef uint8_t[:] t_kind
    cdef int32_t[:] t_out, t_a, t_b, t_c
    cdef list hints

    def __cinit__(self):
        self.coef_s = NULL
        self.coef_big = NULL

    def __init__(self, Py_ssize_t nvars, list coefs, lc_ptr, lc_var, lc_coef,
                 lc_const, con_a, con_b, con_c, t_kind, t_out, t_a, t_b, t_c,
                 list hints):
        cdef Py_ssize_t i, n = len(coefs)
        self.nvars = nvars
        self.coefs = coefs
        self.coef_s = <zk_i128 *>malloc(max(n, 1) * sizeof(zk_i128))
        self.coef_big = <uint8_t *>malloc(max(n, 1))
        for i in range(n):
            c = coefs[i]
            if c > _P // 2:
                c = c - _P
            if -_LIMIT < c < _LIMIT:
                self.coef_big[i] = 0
                self.coef_s[i] = zk_from_parts(<int64_t>(c >> 64), <uint64_t>(c & _MASK64))
            else:
                self.coef_big[i] = 1
                self.coef_s[i] = zk_zero()
        self.lc_ptr = np.ascontiguousarray(lc_ptr, dtype=np.int64)
        self.lc_var = np.ascontiguousarray(lc_var, dtype=np.int32)
        self.lc_coef = np.ascontiguousarray(lc_coef, dtype=np.int32)
        self.lc_const = np.ascontiguousarray(lc_const, dtype=np.int32)
        self.con_a = np.ascontiguousarray(con_a, dtype=np.int32)
        self.con_b = np.ascontiguousarray(con_b, dtype=np.int32)
        self.con_c = np.ascontiguousarray(con_c, dtype=np.int32)
        self.t_kind = np.ascontiguousarray(t_kind, dtype=np.uint8)
        self.t_out = np.ascontiguousarray(t_out, dtype=np.int32)
        self.t_a = np.ascontiguousarray(t_a, dtype=np.int32)
        self.t_b = np.ascontiguousarray(t_b, dtype=np.int32)
        self.t_c = np.ascontiguousarray(t_c, dtype=np.int32)
        self.hints = hints
        self.ncons = self.con_a.shape[0]
        self.nlc = self.lc_const.shape[0]
        self.ntape = self.t_kind.shape[0]

    def __dealloc__(self):
        free(self.coef_s)
        free(self.coef_big)

    def new_buffer(self):
        return Buffer(self.nvars)

    cdef inline bint _lc_fast(self, Buffer buf, Py_ssize_t lc, zk_i128 *out):
        cdef int64_t s = self.lc_ptr[lc]
        cdef int64_t e = self.lc_ptr[lc + 1]
        cdef int32_t k = self.lc_const[lc]
        cdef int32_t v, ci
        cdef zk_i128 acc, prod
        if self.coef_big[k]:
            return False
        acc = self.coef_s[k]
        while s < e:
            v = self.lc_var[s]
            ci = self.lc_coef[s]
            if buf.big[v] or self.coef_big[ci]:
                return False
            if zk_mul_ovf(self.coef_s[ci], zk_from_u64(buf.sv[v]), &prod):
                return False
            if zk_add_ovf(acc, prod, &acc):
                return False
            s += 1
        out[0] = acc
        return True

    cdef object _lc_slow(self, Buffer buf, Py_ssize_t lc):
        cdef int64_t s = self.lc_ptr[lc]
        cdef int64_t e = self.lc_ptr[lc + 1]
        cdef int32_t v
        acc = self.coefs[self.lc_const[lc]]
        coefs = self.coefs
        while s < e:
            v = self.lc_var[s]
            if buf.big[v]:
                acc += coefs[self.lc_coef[s]] * buf.bv[v]
            else:
                acc += coefs[self.lc_coef[s]] * <object>buf.sv[v]
            s += 1
        return acc % _P

    def eval_lc(self, Buffer buf, Py_ssize_t lc):
        return self._lc_slow(buf, lc)

    cdef bint _holds(self, Buffer buf, Py_ssize_t i):
        cdef zk_i128 a, b, c, ab
        if (self._lc_fast(buf, self.con_a[i], &a)
                and self._lc_fast(buf, self.con_b[i], &b)
                and self._lc_fast(buf, self.con_c[i], &c)
                and not zk_mul_ovf(a, b, &ab)):
            return zk_eq(ab, c)
        av = self._lc_slow(buf, self.con_a[i])
        bv = self._lc_slow(buf, self.con_b[i])
        cv = self._lc_slow(buf, self.con_c[i])
        return (av * bv - cv) % _P == 0

    def holds(self, Buffer buf, Py_ssize_t i):
        return self._holds(buf, i)

    def first_violation(self, Buffer buf, Py_ssize_t start=0, Py_ssize_t stop=-1):
        """Index of the first failing constraint in [start, stop), or -1."""
        cdef Py_ssize_t i
        if stop < 0 or stop > self.ncons:
            stop = self.ncons
        for i in range(start, stop):
            if not self._holds(buf, i):
                return i
        return -1

    def violation_in(self, Buffer buf, const int32_t[:] order):
        """First failing constraint when visiting ``order``; -1 if none fail."""
        cdef Py_ssize_t k
        for k in range(order.shape[0]):
            if not self._holds(buf, order[k]):
                return order[k]
        return -1

    cdef inline void _store(self, Buffer buf, Py_ssize_t v, zk_i128 r):
        if zk_is_u64(r):
            buf.sv[v] = zk_lo(r)
            if buf.big[v]:
                buf.big[v] = 0
                buf.bv[v] = None
        else:
            buf._set(v, _to_py(r) % _P)

    def solve(self, Buffer buf, Py_ssize_t start=0, Py_ssize_t stop=-1):
        """Run witness-solving instructions [start, stop) in tape order."""
        cdef Py_ssize_t t, v, j, k, ci
        cdef uint8_t kind
        cdef zk_i128 a, b, c, r, ab
        cdef uint64_t u
        cdef int ovf
        if stop < 0 or stop > self.ntape:
            stop = self.ntape
        for t in range(start, stop):
            kind = self.t_kind[t]
            v = self.t_out[t]
            if kind == OP_SOLVE:
                ci = self.t_a[t]
                if (self._lc_fast(buf, self.con_a[ci], &a)
                        and self._lc_fast(buf, self.con_b[ci], &b)
                        and self._lc_fast(buf, self.t_b[t], &c)
                        and not self.coef_big[self.t_c[t]]
                        and not zk_mul_ovf(a, b, &ab)):
                    ovf = 0
                    r = zk_sub(ab, c, &ovf)
                    if not ovf and not zk_mul_ovf(r, self.coef_s[self.t_c[t]], &r):
                        self._store(buf, v, r)
                        continue
                av = self._lc_slow(buf, self.con_a[ci])
                bv = self._lc_slow(buf, self.con_b[ci])
                cv = self._lc_slow(buf, self.t_b[t])
                buf._set(v, ((av * bv - cv) * self.coefs[self.t_c[t]]) % _P)
            elif kind == OP_BITS:
                k = self.t_c[t]
                if self._lc_fast(buf, self.t_a[t], &r) and zk_is_u64(r):
                    u = zk_lo(r)
                    for j in range(k):
                        if j < 64:
                            buf.sv[v + j] = (u >> j) & 1
                        else:
                            buf.sv[v + j] = 0
                        if buf.big[v + j]:
                            buf.big[v + j] = 0
                            buf.bv[v + j] = None
                else:
                    x = self._lc_slow(buf, self.t_a[t])
                    for j in range(k):
                        buf._set(v + j, (x >> j) & 1)
            elif kind == OP_INV:
                if self._lc_fast(buf, self.t_a[t], &r) and zk_is_u64(r) and zk_lo(r) <= 1:
                    buf._set(v, <object>zk_lo(r))
                else:
                    x = self._lc_slow(buf, self.t_a[t])
                    buf._set(v, pow(x, -1, _P) if x else 0)
            elif kind == OP_HINT:
                fn, ins, outs = self.hints[self.t_a[t]]
                vals = fn(*[self._lc_slow(buf, lc) for lc in ins])
                for j, x in zip(outs, vals):
                    buf._set(j, x)
