"""Truncated arithmetic in the cyclotomic Iwasawa algebra and its
distribution enlargement (f = 1).

An element is stored in idempotent coordinates: one truncated power series
in T = gamma_1 - 1 per character component i of the torsion subgroup
(i in Z/(p-1)), with exact rational coefficients.  p-power denominators are
allowed and tracked; integrality (all denominators prime to p) is what
membership in the integral algebra means here.

The twist automorphism gamma -> chi(gamma) gamma moves the content of
component i+1 to component i (with the standard idempotents
e_i = (p-1)^{-1} sum ϖ^{-i}(delta) delta and Tw(delta) = ϖ(delta) delta,
the i-th component of the twist is the substituted (i+1)-st component of
the argument) and substitutes T -> p + (1+p)T on each series; the
substitution is affine, so the truncation is exact and the twist is a ring
automorphism with exact inverse.
"""

from __future__ import annotations

from fractions import Fraction

from .errors import NotIntegral
from .padic import vp_fraction


class IwasawaContext:
    """p (odd prime), T-truncation order, and the p-adic precision used when
    a truncated p-adic constant (the logarithm normalization) is needed."""

    __slots__ = ("p", "M_T", "N")

    def __init__(self, p: int, M_T: int, N: int = 20):
        if p < 3:
            raise ValueError("p must be an odd prime")
        if M_T < 1:
            raise ValueError("T-truncation must be >= 1")
        self.p = p
        self.M_T = M_T
        self.N = N

    def __eq__(self, other):
        return (isinstance(other, IwasawaContext)
                and (self.p, self.M_T, self.N) == (other.p, other.M_T, other.N))

    def __hash__(self):
        return hash((self.p, self.M_T, self.N))

    def __repr__(self):
        return f"IwasawaContext(p={self.p}, M_T={self.M_T}, N={self.N})"


class IwasawaElement:
    """components[i][k]: coefficient of T^k in the e_i-component, a Fraction."""

    __slots__ = ("ctx", "components")

    def __init__(self, ctx: IwasawaContext, components):
        self.ctx = ctx
        comps = []
        for series in components:
            row = [Fraction(c) for c in series][: ctx.M_T]
            row += [Fraction(0)] * (ctx.M_T - len(row))
            comps.append(tuple(row))
        if len(comps) != ctx.p - 1:
            raise ValueError(f"expected {ctx.p - 1} components")
        self.components = tuple(comps)

    @classmethod
    def zero(cls, ctx):
        return cls(ctx, [[0] for _ in range(ctx.p - 1)])

    @classmethod
    def one(cls, ctx):
        return cls(ctx, [[1] for _ in range(ctx.p - 1)])

    @classmethod
    def from_component(cls, ctx, i, series):
        comps = [[0] for _ in range(ctx.p - 1)]
        comps[i % (ctx.p - 1)] = list(series)
        return cls(ctx, comps)

    def __add__(self, other):
        self._check(other)
        return IwasawaElement(self.ctx, [[a + b for a, b in zip(x, y)]
                                         for x, y in zip(self.components,
                                                         other.components)])

    def __sub__(self, other):
        self._check(other)
        return IwasawaElement(self.ctx, [[a - b for a, b in zip(x, y)]
                                         for x, y in zip(self.components,
                                                         other.components)])

    def __neg__(self):
        return IwasawaElement(self.ctx, [[-a for a in x] for x in self.components])

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return IwasawaElement(self.ctx, [[a * other for a in x]
                                             for x in self.components])
        self._check(other)
        M = self.ctx.M_T
        out = []
        for x, y in zip(self.components, other.components):
            prod = [Fraction(0)] * M
            for i, xi in enumerate(x):
                if xi:
                    for j in range(M - i):
                        if y[j]:
                            prod[i + j] += xi * y[j]
            out.append(prod)
        return IwasawaElement(self.ctx, out)

    __rmul__ = __mul__

    def _check(self, other):
        if not isinstance(other, IwasawaElement) or other.ctx != self.ctx:
            raise ValueError("mixed Iwasawa contexts")

    def __eq__(self, other):
        return (isinstance(other, IwasawaElement) and other.ctx == self.ctx
                and other.components == self.components)

    def __hash__(self):
        return hash((self.ctx, self.components))

    def __repr__(self):
        nonzero = sum(1 for comp in self.components for c in comp if c)
        return f"IwasawaElement(p={self.ctx.p}, M_T={self.ctx.M_T}, {nonzero} terms)"

    def max_denominator_vp(self) -> int:
        """Largest p-power appearing in a denominator (0 for integral)."""
        worst = 0
        for comp in self.components:
            for c in comp:
                if c:
                    v = vp_fraction(c, self.ctx.p)
                    if v < -worst:
                        worst = -v
        return worst

    def is_integral(self) -> bool:
        return all(c.denominator % self.ctx.p for comp in self.components
                   for c in comp)


def idempotent(ctx: IwasawaContext, i: int) -> IwasawaElement:
    """e_i in component coordinates: the indicator of component i.

    The component form is the image of (p-1)^{-1} sum ϖ^{-i}(delta) delta;
    e_i e_j = [i == j] e_i and sum e_i = 1 hold bit-exactly.
    """
    if not 0 <= i <= ctx.p - 2:
        raise ValueError("idempotent index out of range")
    return IwasawaElement.from_component(ctx, i, [1])


def _affine_substitute(series, a: Fraction, b: Fraction, M: int):
    """f(T) -> f(a + b T) by Horner; degree is preserved, no truncation loss."""
    acc = [Fraction(0)] * M
    for c in reversed(series):
        # acc <- acc * (a + bT) + c
        new = [Fraction(0)] * M
        for k in range(M - 1, -1, -1):
            if acc[k]:
                new[k] += acc[k] * a
                if k + 1 < M:
                    new[k + 1] += acc[k] * b
        new[0] += c
        acc = new
    return acc


def twist1(x: IwasawaElement) -> IwasawaElement:
    """The twist by the cyclotomic character: component i receives the
    substituted component i+1, and T -> p + (1+p)T on each series."""
    ctx = x.ctx
    p = ctx.p
    a, b = Fraction(p), Fraction(1 + p)
    comps = []
    for i in range(p - 1):
        src = x.components[(i + 1) % (p - 1)]
        comps.append(_affine_substitute(src, a, b, ctx.M_T))
    return IwasawaElement(ctx, comps)


def twist_minus1(x: IwasawaElement) -> IwasawaElement:
    """Inverse twist: component i receives component i-1 with
    T -> (T - p)/(1+p)."""
    ctx = x.ctx
    p = ctx.p
    a = Fraction(-p, 1 + p)
    b = Fraction(1, 1 + p)
    comps = []
    for i in range(p - 1):
        src = x.components[(i - 1) % (p - 1)]
        comps.append(_affine_substitute(src, a, b, ctx.M_T))
    return IwasawaElement(ctx, comps)


def log_one_plus_p(ctx: IwasawaContext) -> Fraction:
    """Truncated p-adic logarithm of 1+p as an exact rational, correct to
    valuation >= N + 2 (the true value has valuation 1).

    Tail term k has valuation k - v_p(k) >= k - log_p(k), so N + 8 terms
    are comfortably enough for any p >= 3 and the N used here."""
    p = ctx.p
    total = Fraction(0)
    for k in range(1, ctx.N + 9):
        total += Fraction((-1) ** (k + 1) * p ** k, k)
    return total


def ell(ctx: IwasawaContext, j: int) -> IwasawaElement:
    """ell_j = log(1+T)/log_p(1+p) - j, as a series with rational
    coefficients carrying p in the denominators (tracked, not forbidden).

    The normalization divides by the truncated logarithm of 1+p, so that
    evaluating formally at T = (1+p)^k - 1 gives k - j up to the working
    precision."""
    lp = log_one_plus_p(ctx)
    series = [Fraction(0)] * ctx.M_T
    series[0] = Fraction(-j)
    for k in range(1, ctx.M_T):
        series[k] = Fraction((-1) ** (k + 1), k) / lp
    return IwasawaElement(ctx, [list(series) for _ in range(ctx.p - 1)])


def eval_at_zero(x: IwasawaElement) -> Fraction:
    """Projection to the component-0 factor followed by T -> 0; a ring
    homomorphism."""
    return x.components[0][0]


def evaluate_component(x: IwasawaElement, i: int, t0: Fraction) -> Fraction:
    """Finite evaluation of the component-i series at a rational point
    (used for the character-value checks; the truncation tail is dropped)."""
    acc = Fraction(0)
    for c in reversed(x.components[i % (x.ctx.p - 1)]):
        acc = acc * t0 + c
    return acc


def is_lambda_unit(x: IwasawaElement) -> bool:
    """Invertibility in the integral algebra: every local factor Z_p[[T]]
    needs a unit constant term.

    Raises NotIntegral when a coefficient has p in its denominator."""
    if not x.is_integral():
        raise NotIntegral("element has p-power denominators")
    p = x.ctx.p
    for comp in x.components:
        c0 = comp[0]
        if c0 == 0 or vp_fraction(c0, p) != 0:
            return False
    return True


def delta_twist_consistency(delta_V: IwasawaElement,
                            delta_V1: IwasawaElement) -> bool:
    """Whether the two candidate determinant elements are related by the
    twist: twist1(delta_V) == delta_V1, checked componentwise, together with
    the per-idempotent form e_i * delta_V1 == twist1(e_{i+1} * delta_V)."""
    ctx = delta_V.ctx
    tw = twist1(delta_V)
    if tw != delta_V1:
        return False
    for i in range(ctx.p - 1):
        lhs = idempotent(ctx, i) * delta_V1
        rhs = twist1(idempotent(ctx, (i + 1) % (ctx.p - 1)) * delta_V)
        if lhs != rhs:
            return False
    return True
