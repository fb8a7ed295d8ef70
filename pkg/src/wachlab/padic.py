"""Exact arithmetic in O_F = W(F_{p^f}) at finite precision.

Elements of the unramified extension are coefficient vectors over a fixed
monic modulus, every coordinate reduced mod p^N.  The module also provides
integer matrices over O_F with Smith normal form over the local ring,
Newton polygons of characteristic polynomials, the stabilized rank of a
semilinear reduction mod p, and a semisimplicity test for exact rational
matrices.

All values are immutable after construction; operations are pure.
"""

from __future__ import annotations

import itertools
from fractions import Fraction

from .errors import NotAUnit, PrecisionLoss


def vp_int(n: int, p: int) -> int | None:
    """p-adic valuation of an integer; None for n == 0."""
    if n == 0:
        return None
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


def vp_fraction(x: Fraction, p: int) -> int | None:
    if x == 0:
        return None
    return vp_int(x.numerator, p) - vp_int(x.denominator, p)


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    for q in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        if n % q == 0:
            return n == q
    # deterministic Miller-Rabin for the range we care about
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


# ---------------------------------------------------------------------------
# polynomial helpers over F_p (for the residue field of a degree-f extension)
# ---------------------------------------------------------------------------

def _poly_trim(a):
    while a and a[-1] == 0:
        a.pop()
    return a


def _poly_mulmod_fp(a, b, m, p):
    """(a*b) mod m over F_p, m monic."""
    r = [0] * (len(a) + len(b) - 1) if a and b else []
    for i, ai in enumerate(a):
        if ai:
            for j, bj in enumerate(b):
                r[i + j] = (r[i + j] + ai * bj) % p
    f = len(m) - 1
    for i in range(len(r) - 1, f - 1, -1):
        c = r[i]
        if c:
            for j in range(f):
                r[i - f + j] = (r[i - f + j] - c * m[j]) % p
            r[i] = 0
    return _poly_trim(r[:f] if len(r) > f else r)


def _poly_powmod_fp(a, e, m, p):
    r = [1]
    b = list(a)
    while e:
        if e & 1:
            r = _poly_mulmod_fp(r, b, m, p)
        b = _poly_mulmod_fp(b, b, m, p)
        e >>= 1
    return r


def _poly_gcd_fp(a, b, p):
    a, b = list(a), list(b)
    while b:
        # a mod b, b monic-ized on the fly
        inv = pow(b[-1], -1, p)
        while len(a) >= len(b) and a:
            c = a[-1] * inv % p
            off = len(a) - len(b)
            for j in range(len(b)):
                a[off + j] = (a[off + j] - c * b[j]) % p
            _poly_trim(a)
        a, b = b, a
    return a


def _poly_sub_fp(a, b, p):
    return _poly_trim([(x - y) % p for x, y in itertools.zip_longest(a, b, fillvalue=0)])


def _poly_irreducible_fp(m, p) -> bool:
    """Monic m of degree f is irreducible over F_p: x^{p^f} = x mod m and
    x^{p^{f/l}} - x is coprime to m for every prime l | f."""
    f = len(m) - 1
    if f < 1:
        return False
    x = [0, 1]
    if _poly_sub_fp(_poly_powmod_fp(x, p ** f, m, p), x, p):
        return False
    for ell in {q for q in range(2, f + 1) if f % q == 0 and _is_prime(q)}:
        diff = _poly_sub_fp(_poly_powmod_fp(x, p ** (f // ell), m, p), x, p)
        if not diff:
            return False
        if len(_poly_gcd_fp(m, diff, p)) - 1 > 0:
            return False
    return True


def _default_modulus(p: int, f: int):
    """First monic irreducible of degree f over F_p, coefficients enumerated
    lexicographically.  Degree 1 is the polynomial x."""
    if f == 1:
        return (0, 1)
    for tail in itertools.product(range(p), repeat=f):
        m = list(tail) + [1]
        if _poly_irreducible_fp(m, p):
            return tuple(m)
    raise AssertionError("no irreducible polynomial found")  # unreachable


# ---------------------------------------------------------------------------
# precision context
# ---------------------------------------------------------------------------

class _InexactShift(Exception):
    """Internal marker for a failed exact division; never escapes the module
    without being converted to a package error."""


class PrecisionContext:
    """Fixes (p, f, N) and the residue modulus once for a whole computation.

    p must be an odd prime, N >= 1 the absolute precision exponent, and the
    modulus a monic degree-f integer polynomial irreducible mod p.  Raw
    coefficient tuples live in [0, p^N)^f; the context owns the arithmetic
    on them so that OFElement stays a thin immutable wrapper.
    """

    def __init__(self, p: int, N: int, f: int = 1, modulus=None):
        if p < 3 or not _is_prime(p):
            raise ValueError(f"p must be an odd prime, got {p}")
        if N < 1:
            raise ValueError("precision N must be >= 1")
        if f < 1:
            raise ValueError("residue degree f must be >= 1")
        if modulus is None:
            modulus = _default_modulus(p, f)
        modulus = tuple(int(c) for c in modulus)
        if len(modulus) != f + 1 or modulus[-1] != 1:
            raise ValueError("modulus must be monic of degree f")
        if f > 1 and not _poly_irreducible_fp([c % p for c in modulus], p):
            raise ValueError("modulus is reducible mod p")
        self.p = p
        self.N = N
        self.f = f
        self.modulus = modulus
        self.pN = p ** N
        self._frob_pows = None  # rows: coords of sigma(x)^j, computed lazily

    def __eq__(self, other):
        return (isinstance(other, PrecisionContext)
                and (self.p, self.N, self.f, self.modulus)
                == (other.p, other.N, other.f, other.modulus))

    def __hash__(self):
        return hash((self.p, self.N, self.f, self.modulus))

    def __repr__(self):
        if self.f == 1:
            return f"PrecisionContext(p={self.p}, N={self.N})"
        return f"PrecisionContext(p={self.p}, N={self.N}, f={self.f})"

    def residue(self) -> "PrecisionContext":
        """The same field data at precision 1 (arithmetic in F_{p^f})."""
        return PrecisionContext(self.p, 1, self.f, self.modulus)

    # -- raw tuple arithmetic ------------------------------------------------

    def zero_raw(self):
        return (0,) * self.f

    def one_raw(self):
        return (1,) + (0,) * (self.f - 1)

    def add_raw(self, a, b):
        pN = self.pN
        return tuple((x + y) % pN for x, y in zip(a, b))

    def sub_raw(self, a, b):
        pN = self.pN
        return tuple((x - y) % pN for x, y in zip(a, b))

    def neg_raw(self, a):
        pN = self.pN
        return tuple(-x % pN for x in a)

    def mul_raw(self, a, b):
        if self.f == 1:
            return ((a[0] * b[0]) % self.pN,)
        r = [0] * (2 * self.f - 1)
        for i, ai in enumerate(a):
            if ai:
                for j, bj in enumerate(b):
                    r[i + j] += ai * bj
        m, f, pN = self.modulus, self.f, self.pN
        for i in range(len(r) - 1, f - 1, -1):
            c = r[i]
            if c:
                for j in range(f):
                    r[i - f + j] -= c * m[j]
                r[i] = 0
        return tuple(x % pN for x in r[:f])

    def scalar_raw(self, k: int, a):
        pN = self.pN
        return tuple((k * x) % pN for x in a)

    def val_raw(self, a) -> int | None:
        """min coordinate valuation; None when a == 0 at precision."""
        v = self.N
        p = self.p
        for x in a:
            if x:
                w = 0
                while x % p == 0:
                    x //= p
                    w += 1
                if w < v:
                    v = w
                if v == 0:
                    return 0
        return None if v >= self.N else v

    def shift_raw(self, a, k: int):
        """Exact division of each coordinate's canonical representative by p^k."""
        pk = self.p ** k
        out = []
        for x in a:
            if x % pk:
                raise _InexactShift
            out.append(x // pk)
        return tuple(out)

    def inv_raw(self, a):
        """Inverse of a unit, by Hensel lifting from the residue field."""
        if self.f == 1:
            if a[0] % self.p == 0:
                raise NotAUnit("element is divisible by p")
            return (pow(a[0], -1, self.pN),)
        p = self.p
        abar = [x % p for x in a]
        if not _poly_trim(list(abar)):
            raise NotAUnit("element is divisible by p")
        # extended Euclid over F_p to invert mod (p, modulus)
        inv = self._inv_mod_p(abar)
        x = tuple(inv[i] if i < len(inv) else 0 for i in range(self.f))
        k = 1
        while k < self.N:
            # x <- x(2 - a x), doubling the precision of a*x == 1
            ax = self.mul_raw(a, x)
            two_minus = self.sub_raw(self.add_raw(self.one_raw(), self.one_raw()), ax)
            x = self.mul_raw(x, two_minus)
            k *= 2
        return x

    def _inv_mod_p(self, abar):
        p = self.p
        m = [c % p for c in self.modulus]
        # extended Euclid: find u with u*abar == 1 mod (m, p)
        r0, r1 = list(m), _poly_trim(list(abar))
        s0, s1 = [], [1]
        while r1:
            inv = pow(r1[-1], -1, p)
            q = [0] * (len(r0) - len(r1) + 1) if len(r0) >= len(r1) else []
            r = list(r0)
            while len(r) >= len(r1) and r:
                c = r[-1] * inv % p
                off = len(r) - len(r1)
                q[off] = c
                for j in range(len(r1)):
                    r[off + j] = (r[off + j] - c * r1[j]) % p
                _poly_trim(r)
            qs1 = [0] * (len(q) + len(s1) - 1) if q and s1 else []
            for i, qi in enumerate(q):
                if qi:
                    for j, sj in enumerate(s1):
                        qs1[i + j] = (qs1[i + j] + qi * sj) % p
            s = [(a - b) % p for a, b in itertools.zip_longest(s0, qs1, fillvalue=0)]
            r0, r1 = r1, r
            s0, s1 = s1, _poly_trim(s)
        c = pow(r0[-1], -1, p)  # normalize gcd (a unit of F_p)
        return [x * c % p for x in s0]

    # -- Frobenius lift ------------------------------------------------------

    def _frobenius_powers(self):
        """Coordinates of sigma(x)^j for j < f, where sigma lifts y -> y^p.

        sigma(x) is the root of the modulus congruent to x^p mod p, found by
        Newton iteration (the modulus is separable mod p, so the derivative
        is a unit at the approximate root)."""
        if self._frob_pows is not None:
            return self._frob_pows
        if self.f == 1:
            self._frob_pows = (self.one_raw(),)
            return self._frob_pows
        x = (0, 1) + (0,) * (self.f - 2)
        t = self._pow_raw(x, self.p)
        dmod = tuple((i + 1) * self.modulus[i + 1] for i in range(self.f))
        for _ in range(self.N.bit_length() + 1):
            mt = self._eval_poly_raw(self.modulus, t)
            if self.val_raw(mt) is None:
                break
            dmt = self._eval_poly_raw(dmod, t)
            t = self.sub_raw(t, self.mul_raw(mt, self.inv_raw(dmt)))
        pows = [self.one_raw()]
        for _ in range(1, self.f):
            pows.append(self.mul_raw(pows[-1], t))
        self._frob_pows = tuple(pows)
        return self._frob_pows

    def _pow_raw(self, a, e: int):
        r = self.one_raw()
        b = a
        while e:
            if e & 1:
                r = self.mul_raw(r, b)
            b = self.mul_raw(b, b)
            e >>= 1
        return r

    def _eval_poly_raw(self, coeffs, t):
        """Evaluate an integer polynomial at the raw element t (Horner)."""
        acc = self.zero_raw()
        for c in reversed(coeffs):
            acc = self.mul_raw(acc, t)
            acc = self.add_raw(acc, self.scalar_raw(int(c), self.one_raw()))
        return acc

    def frob_raw(self, a):
        if self.f == 1:
            return a
        pows = self._frobenius_powers()
        acc = self.zero_raw()
        for coeff, tp in zip(a, pows):
            if coeff:
                acc = self.add_raw(acc, self.scalar_raw(coeff, tp))
        return acc


# ---------------------------------------------------------------------------
# elements
# ---------------------------------------------------------------------------

class OFElement:
    """Element of O_F at the context's absolute precision.

    coeffs is a length-f tuple of integers in [0, p^N), the coordinates in
    the power basis of the modulus.  For f = 1 this is an integer mod p^N.
    """

    __slots__ = ("ctx", "coeffs")

    def __init__(self, ctx: PrecisionContext, coeffs):
        self.ctx = ctx
        if isinstance(coeffs, int):
            coeffs = (coeffs % ctx.pN,) + (0,) * (ctx.f - 1)
        else:
            coeffs = tuple(int(c) % ctx.pN for c in coeffs)
            if len(coeffs) != ctx.f:
                raise ValueError("coefficient vector has wrong length")
        self.coeffs = coeffs

    def _coerce(self, other):
        if isinstance(other, OFElement):
            if other.ctx != self.ctx:
                raise ValueError("mixed precision contexts")
            return other
        if isinstance(other, int):
            return OFElement(self.ctx, other)
        return NotImplemented

    def __add__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return OFElement(self.ctx, self.ctx.add_raw(self.coeffs, o.coeffs))

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return OFElement(self.ctx, self.ctx.sub_raw(self.coeffs, o.coeffs))

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return OFElement(self.ctx, self.ctx.sub_raw(o.coeffs, self.coeffs))

    def __mul__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return OFElement(self.ctx, self.ctx.mul_raw(self.coeffs, o.coeffs))

    __rmul__ = __mul__

    def __neg__(self):
        return OFElement(self.ctx, self.ctx.neg_raw(self.coeffs))

    def __eq__(self, other):
        if isinstance(other, int):
            other = OFElement(self.ctx, other)
        return (isinstance(other, OFElement) and other.ctx == self.ctx
                and other.coeffs == self.coeffs)

    def __hash__(self):
        return hash((self.ctx, self.coeffs))

    def __repr__(self):
        if self.ctx.f == 1:
            return f"OF({self.coeffs[0]} mod {self.ctx.p}^{self.ctx.N})"
        return f"OF({list(self.coeffs)} mod {self.ctx.p}^{self.ctx.N})"

    def is_zero(self) -> bool:
        return all(c == 0 for c in self.coeffs)

    def is_unit(self) -> bool:
        return any(c % self.ctx.p for c in self.coeffs)

    def valuation(self) -> int | None:
        """p-adic valuation; None when the element is 0 at precision N."""
        return self.ctx.val_raw(self.coeffs)

    def unit_inverse(self) -> "OFElement":
        if not self.is_unit():
            raise NotAUnit("cannot invert: element is 0 mod p")
        return OFElement(self.ctx, self.ctx.inv_raw(self.coeffs))

    def divide_exact_p(self, k: int) -> "OFElement":
        """Divide by p^k; the canonical representative must be divisible.

        Absolute precision of the result is only N - k, but the value is
        re-embedded at precision N (higher digits unspecified-as-zero); use
        with care, mainly for Smith-normal-form internals."""
        try:
            return OFElement(self.ctx, self.ctx.shift_raw(self.coeffs, k))
        except _InexactShift:
            raise PrecisionLoss(f"representative not divisible by p^{k}") from None


def frobenius(x: OFElement) -> OFElement:
    """The Frobenius lift sigma on O_F; identity when F = Q_p.

    sigma is the ring endomorphism with sigma(x) == x^p mod p on the residue
    field, Hensel-lifted once per context.  sigma^f = id at precision N.
    """
    return OFElement(x.ctx, x.ctx.frob_raw(x.coeffs))


def teichmuller(ctx: PrecisionContext, u: int) -> OFElement:
    """The Teichmuller representative: the (p^f - 1)-th root of unity
    congruent to u mod p, computed by iterating y -> y^{p^f}."""
    if u % ctx.p == 0:
        raise NotAUnit(f"{u} is divisible by p={ctx.p}")
    y = u % ctx.pN
    q = ctx.p ** ctx.f
    for _ in range(ctx.N):
        y = pow(y, q, ctx.pN)
    return OFElement(ctx, y)


# ---------------------------------------------------------------------------
# matrices
# ---------------------------------------------------------------------------

class OFMatrix:
    """Immutable matrix over O_F at fixed precision."""

    __slots__ = ("ctx", "rows", "cols", "entries")

    def __init__(self, ctx: PrecisionContext, entries):
        self.ctx = ctx
        rows = []
        for row in entries:
            r = tuple(e if isinstance(e, OFElement) else OFElement(ctx, e) for e in row)
            for e in r:
                if e.ctx != ctx:
                    raise ValueError("mixed precision contexts in matrix")
            rows.append(r)
        self.entries = tuple(rows)
        self.rows = len(self.entries)
        self.cols = len(self.entries[0]) if self.entries else 0
        if any(len(r) != self.cols for r in self.entries):
            raise ValueError("ragged matrix")

    @classmethod
    def identity(cls, ctx, n):
        return cls(ctx, [[1 if i == j else 0 for j in range(n)] for i in range(n)])

    @classmethod
    def zero(cls, ctx, rows, cols):
        return cls(ctx, [[0] * cols for _ in range(rows)])

    def __getitem__(self, ij):
        return self.entries[ij[0]][ij[1]]

    def __eq__(self, other):
        return (isinstance(other, OFMatrix) and self.ctx == other.ctx
                and self.entries == other.entries)

    def __hash__(self):
        return hash((self.ctx, self.entries))

    def __repr__(self):
        body = "; ".join(" ".join(repr(e.coeffs[0] if self.ctx.f == 1 else list(e.coeffs))
                                   for e in row) for row in self.entries)
        return f"OFMatrix[{self.rows}x{self.cols}]({body})"

    def __add__(self, other):
        if self.rows != other.rows or self.cols != other.cols:
            raise ValueError("shape mismatch")
        return OFMatrix(self.ctx, [[a + b for a, b in zip(r1, r2)]
                                   for r1, r2 in zip(self.entries, other.entries)])

    def __sub__(self, other):
        if self.rows != other.rows or self.cols != other.cols:
            raise ValueError("shape mismatch")
        return OFMatrix(self.ctx, [[a - b for a, b in zip(r1, r2)]
                                   for r1, r2 in zip(self.entries, other.entries)])

    def __mul__(self, other):
        if isinstance(other, (int, OFElement)):
            return OFMatrix(self.ctx, [[e * other for e in row] for row in self.entries])
        if self.cols != other.rows:
            raise ValueError("shape mismatch")
        ctx = self.ctx
        out = []
        for i in range(self.rows):
            row = []
            for j in range(other.cols):
                acc = ctx.zero_raw()
                for k in range(self.cols):
                    acc = ctx.add_raw(acc, ctx.mul_raw(self.entries[i][k].coeffs,
                                                       other.entries[k][j].coeffs))
                row.append(OFElement(ctx, acc))
            out.append(row)
        return OFMatrix(ctx, out)

    __rmul__ = __mul__

    def transpose(self):
        return OFMatrix(self.ctx, [[self.entries[i][j] for i in range(self.rows)]
                                   for j in range(self.cols)])

    def map(self, fn):
        return OFMatrix(self.ctx, [[fn(e) for e in row] for row in self.entries])

    def det(self) -> OFElement:
        """Exact determinant mod p^N, by elimination with minimal-valuation
        pivots (row operations keep the determinant, swaps flip its sign)."""
        if self.rows != self.cols:
            raise ValueError("determinant of non-square matrix")
        ctx = self.ctx
        a = [[e.coeffs for e in row] for row in self.entries]
        n = self.rows
        sign = 1
        acc = ctx.one_raw()
        for k in range(n):
            piv = _find_pivot(ctx, a, k, n, n)
            if piv is None:
                return OFElement(ctx, 0)
            (i, j, v) = piv
            if i != k:
                a[i], a[k] = a[k], a[i]
                sign = -sign
            if j != k:
                for r in a:
                    r[j], r[k] = r[k], r[j]
                sign = -sign
            pivot = a[k][k]
            unit = ctx.shift_raw(pivot, v)
            unit_inv = ctx.inv_raw(unit)
            for i in range(k + 1, n):
                e = a[i][k]
                if ctx.val_raw(e) is None:
                    continue
                q = ctx.mul_raw(ctx.shift_raw(e, v), unit_inv)
                for j in range(k, n):
                    a[i][j] = ctx.sub_raw(a[i][j], ctx.mul_raw(q, a[k][j]))
            acc = ctx.mul_raw(acc, pivot)
        if sign < 0:
            acc = ctx.neg_raw(acc)
        return OFElement(ctx, acc)

    def inverse(self) -> "OFMatrix":
        """Inverse over the local ring; requires a unit determinant."""
        if self.rows != self.cols:
            raise ValueError("inverse of non-square matrix")
        ctx = self.ctx
        n = self.rows
        a = [[e.coeffs for e in row] for row in self.entries]
        b = [[ctx.one_raw() if i == j else ctx.zero_raw() for j in range(n)]
             for i in range(n)]
        for k in range(n):
            piv = None
            for i in range(k, n):
                if ctx.val_raw(a[i][k]) == 0:
                    piv = i
                    break
            if piv is None:
                raise NotAUnit("matrix is not invertible over O_F")
            if piv != k:
                a[piv], a[k] = a[k], a[piv]
                b[piv], b[k] = b[k], b[piv]
            inv = ctx.inv_raw(a[k][k])
            a[k] = [ctx.mul_raw(inv, e) for e in a[k]]
            b[k] = [ctx.mul_raw(inv, e) for e in b[k]]
            for i in range(n):
                if i != k and ctx.val_raw(a[i][k]) is not None:
                    q = a[i][k]
                    a[i] = [ctx.sub_raw(e, ctx.mul_raw(q, f)) for e, f in zip(a[i], a[k])]
                    b[i] = [ctx.sub_raw(e, ctx.mul_raw(q, f)) for e, f in zip(b[i], b[k])]
        return OFMatrix(ctx, [[OFElement(ctx, e) for e in row] for row in b])

    def frobenius_map(self) -> "OFMatrix":
        return self.map(frobenius)


def _find_pivot(ctx, a, k, nrows, ncols):
    """Minimal valuation entry of the trailing block, ties in row-major order."""
    best = None
    for i in range(k, nrows):
        for j in range(k, ncols):
            v = ctx.val_raw(a[i][j])
            if v is None:
                continue
            if best is None or v < best[2]:
                best = (i, j, v)
                if v == 0:
                    return best
    return best


class SmithNormalForm:
    """Result bundle: U @ M @ V == D bit-exactly at precision N.

    exponents[i] is the p-valuation of D[i][i], or None when the diagonal
    entry is 0 at precision (the valuation cannot be decided).
    """

    __slots__ = ("U", "D", "V", "exponents")

    def __init__(self, U, D, V, exponents):
        self.U, self.D, self.V, self.exponents = U, D, V, exponents

    @property
    def rank(self) -> int:
        return sum(1 for e in self.exponents if e is not None)


def smith_normal_form(M: OFMatrix) -> SmithNormalForm:
    """Smith normal form over the local ring O_F.

    Pivots are chosen with minimal valuation (ties row-major), so the
    diagonal automatically satisfies p^{e_1} | p^{e_2} | ...  All row and
    column operations happen mod p^N with quotients chosen so that the
    eliminated entries vanish exactly; U and V are invertible at precision N
    and the reconstruction U M V = D is bit-exact.
    """
    ctx = M.ctx
    nr, nc = M.rows, M.cols
    a = [[e.coeffs for e in row] for row in M.entries]
    U = [[ctx.one_raw() if i == j else ctx.zero_raw() for j in range(nr)] for i in range(nr)]
    V = [[ctx.one_raw() if i == j else ctx.zero_raw() for j in range(nc)] for i in range(nc)]
    exps: list[int | None] = []
    for k in range(min(nr, nc)):
        piv = _find_pivot(ctx, a, k, nr, nc)
        if piv is None:
            exps.extend([None] * (min(nr, nc) - k))
            break
        i0, j0, v = piv
        if i0 != k:
            a[i0], a[k] = a[k], a[i0]
            U[i0], U[k] = U[k], U[i0]
        if j0 != k:
            for r in a:
                r[j0], r[k] = r[k], r[j0]
            for r in V:
                r[j0], r[k] = r[k], r[j0]
        pivot = a[k][k]
        unit_inv = ctx.inv_raw(ctx.shift_raw(pivot, v))
        for i in range(k + 1, nr):
            e = a[i][k]
            if ctx.val_raw(e) is None:
                a[i][k] = ctx.zero_raw()
                continue
            q = ctx.mul_raw(ctx.shift_raw(e, v), unit_inv)
            for j in range(k, nc):
                a[i][j] = ctx.sub_raw(a[i][j], ctx.mul_raw(q, a[k][j]))
            for j in range(nr):
                U[i][j] = ctx.sub_raw(U[i][j], ctx.mul_raw(q, U[k][j]))
        for j in range(k + 1, nc):
            e = a[k][j]
            if ctx.val_raw(e) is None:
                a[k][j] = ctx.zero_raw()
                continue
            q = ctx.mul_raw(ctx.shift_raw(e, v), unit_inv)
            for i in range(k, nr):
                a[i][j] = ctx.sub_raw(a[i][j], ctx.mul_raw(q, a[i][k]))
            for i in range(nc):
                V[i][j] = ctx.sub_raw(V[i][j], ctx.mul_raw(q, V[i][k]))
        exps.append(v)
    wrap = lambda m: OFMatrix(ctx, [[OFElement(ctx, e) for e in row] for row in m])
    return SmithNormalForm(wrap(U), wrap(a), wrap(V), tuple(exps))


# ---------------------------------------------------------------------------
# Newton polygons and the semilinear unit-root test
# ---------------------------------------------------------------------------

def charpoly(M: OFMatrix) -> list[OFElement]:
    """Coefficients [c_0, ..., c_d] of det(T*I - M), c_d = 1.

    Expanded over permutations; the matrices in this package are tiny and
    the ring Z/p^N has zero divisors, which rules out fraction-free
    elimination tricks.
    """
    if M.rows != M.cols:
        raise ValueError("characteristic polynomial of non-square matrix")
    n = M.rows
    if n > 8:
        raise ValueError("permutation expansion limited to d <= 8")
    ctx = M.ctx
    coeffs = [ctx.zero_raw() for _ in range(n + 1)]
    for perm in itertools.permutations(range(n)):
        sign = _perm_sign(perm)
        # product of entries of T*I - M: off-diagonal constants, diagonal T - m_ii
        poly = [ctx.one_raw()]
        ok = True
        for i, j in enumerate(perm):
            if i == j:
                mii = ctx.neg_raw(M.entries[i][i].coeffs)
                new = [ctx.zero_raw() for _ in range(len(poly) + 1)]
                for k, c in enumerate(poly):
                    new[k] = ctx.add_raw(new[k], ctx.mul_raw(c, mii))
                    new[k + 1] = ctx.add_raw(new[k + 1], c)
                poly = new
            else:
                e = ctx.neg_raw(M.entries[i][j].coeffs)
                if all(x == 0 for x in e):
                    ok = False
                    break
                poly = [ctx.mul_raw(c, e) for c in poly]
        if not ok:
            continue
        for k, c in enumerate(poly):
            if sign > 0:
                coeffs[k] = ctx.add_raw(coeffs[k], c)
            else:
                coeffs[k] = ctx.sub_raw(coeffs[k], c)
    return [OFElement(ctx, c) for c in coeffs]


def _perm_sign(perm):
    sign = 1
    seen = [False] * len(perm)
    for i in range(len(perm)):
        if seen[i]:
            continue
        j, clen = i, 0
        while not seen[j]:
            seen[j] = True
            j = perm[j]
            clen += 1
        if clen % 2 == 0:
            sign = -sign
    return sign


def _lower_hull(points):
    """Lower convex hull of integer points sorted by x."""
    hull = []
    for pt in points:
        while len(hull) >= 2:
            (x1, y1), (x2, y2) = hull[-2], hull[-1]
            # pop if hull[-1] is above the segment hull[-2] -> pt
            if (y2 - y1) * (pt[0] - x1) >= (pt[1] - y1) * (x2 - x1):
                hull.pop()
            else:
                break
        hull.append(pt)
    return hull


def newton_slopes(M: OFMatrix) -> list[Fraction]:
    """Valuations of the eigenvalues of the semilinear operator with matrix M.

    Computes the characteristic polynomial of the f-fold twisted product
    (the matrix of phi^f, which is O_F-linear) and reads the slopes off its
    Newton polygon, each divided by f.  Multiplicities are kept; the sum of
    the returned slopes is v_p(det M).

    Raises PrecisionLoss when a coefficient that is 0 at precision N could
    still lower the polygon.
    """
    ctx = M.ctx
    prod = M
    twisted = M
    for _ in range(ctx.f - 1):
        twisted = twisted.frobenius_map()
        prod = twisted * prod
    cs = charpoly(prod)
    d = len(cs) - 1
    vals = [c.valuation() for c in cs]
    if vals[0] is None:
        raise PrecisionLoss("det(M) is 0 at precision N; smallest slopes undecidable")
    known = [(i, v) for i, v in enumerate(vals) if v is not None]
    hull = _lower_hull(known)
    # a coefficient that is 0 at precision could cut the hull only if the
    # hull passes strictly above the precision ceiling at its abscissa
    for i, v in enumerate(vals):
        if v is None and _hull_height(hull, i) > ctx.N:
            raise PrecisionLoss(f"Newton polygon vertex at index {i} undecided at N={ctx.N}")
    slopes: list[Fraction] = []
    for (x1, y1), (x2, y2) in zip(hull, hull[1:]):
        lam = Fraction(y1 - y2, x2 - x1)
        slopes.extend([lam / ctx.f] * (x2 - x1))
    assert len(slopes) == d
    return sorted(slopes)


def _hull_height(hull, x):
    for (x1, y1), (x2, y2) in zip(hull, hull[1:]):
        if x1 <= x <= x2:
            return Fraction(y1) + Fraction(y2 - y1, x2 - x1) * (x - x1)
    return Fraction(10 ** 9)  # outside the hull span: unconstrained


def semilinear_stable_rank(M: OFMatrix) -> int:
    """Stabilized rank of the mod-p reduction composed with Frobenius.

    Reduces M to B over the residue field and forms the matrix of the
    d*f-th iterate of x -> sigma(x) B (images of basis vectors in rows);
    returns its rank.  Rank 0 certifies that the twisted products of B
    tend to 0, i.e. the operator has no slope-0 part.
    """
    rctx = M.ctx.residue()
    B = OFMatrix(rctx, [[tuple(c % rctx.p for c in e.coeffs) for e in row]
                        for row in M.entries])
    steps = M.rows * rctx.f
    acc = B
    for _ in range(steps - 1):
        # matrix of the next iterate of x -> sigma(x) B (images in rows)
        acc = acc.frobenius_map() * B
    return _residue_rank(acc)


def _residue_rank(B: OFMatrix) -> int:
    ctx = B.ctx
    a = [list(row) for row in B.entries]
    rank = 0
    col = 0
    while rank < B.rows and col < B.cols:
        piv = None
        for i in range(rank, B.rows):
            if not a[i][col].is_zero():
                piv = i
                break
        if piv is None:
            col += 1
            continue
        a[rank], a[piv] = a[piv], a[rank]
        inv = a[rank][col].unit_inverse()
        a[rank] = [e * inv for e in a[rank]]
        for i in range(B.rows):
            if i != rank and not a[i][col].is_zero():
                c = a[i][col]
                a[i] = [e - c * g for e, g in zip(a[i], a[rank])]
        rank += 1
        col += 1
    return rank


# ---------------------------------------------------------------------------
# semisimplicity over exact rationals
# ---------------------------------------------------------------------------

def rational_rank(M) -> int:
    """Rank of a matrix with Fraction entries, by Gaussian elimination."""
    a = [[Fraction(e) for e in row] for row in M]
    if not a:
        return 0
    rows, cols = len(a), len(a[0])
    rank = 0
    col = 0
    while rank < rows and col < cols:
        piv = next((i for i in range(rank, rows) if a[i][col] != 0), None)
        if piv is None:
            col += 1
            continue
        a[rank], a[piv] = a[piv], a[rank]
        pv = a[rank][col]
        a[rank] = [x / pv for x in a[rank]]
        for i in range(rows):
            if i != rank and a[i][col] != 0:
                c = a[i][col]
                a[i] = [x - c * y for x, y in zip(a[i], a[rank])]
        rank += 1
        col += 1
    return rank


def is_semisimple_at(M, alpha) -> bool:
    """Whether the exact rational matrix M is semisimple at alpha, i.e.
    ker(M - alpha) and im(M - alpha) intersect trivially.

    Equivalent to rank(M - alpha) == rank((M - alpha)^2); meaningful only
    for exact input, never for precision-truncated matrices.
    """
    alpha = Fraction(alpha)
    n = len(M)
    A = [[Fraction(M[i][j]) - (alpha if i == j else 0) for j in range(n)]
         for i in range(n)]
    A2 = [[sum(A[i][k] * A[k][j] for k in range(n)) for j in range(n)]
          for i in range(n)]
    return rational_rank(A) == rational_rank(A2)
