"""Strongly divisible filtered phi-modules over O_F.

A module is presented in an adapted basis: sorted filtration jumps
0 <= r_1 <= ... <= r_d <= p-1 and an invertible matrix A, the operator
acting on row vectors by x -> sigma(x) * Phi with Phi = Diag(p^{r_i}) * A
(images of basis vectors in the rows; this is the only convention under
which an arbitrary invertible A yields a strongly divisible lattice).
The integer `shift` records a Tate twist: the presented object is the
twist by `shift` of the stored normalized one, so the actual filtration
jump positions are r_i + shift.

Raw presentations (any basis, explicit filtration sublattices) can be
tested for strong divisibility and converted to adapted form.
"""

from __future__ import annotations

from .errors import NotAUnit, PrecisionLoss, ValidationError, WindowOverflow
from .padic import (
    OFElement,
    OFMatrix,
    PrecisionContext,
    newton_slopes,
    semilinear_stable_rank,
    smith_normal_form,
)


class FilPhiModule:
    """Adapted presentation (jumps, A, shift) of a strongly divisible lattice."""

    __slots__ = ("ctx", "d", "jumps", "A", "shift", "_phi")

    def __init__(self, ctx: PrecisionContext, jumps, A: OFMatrix, shift: int = 0):
        jumps = tuple(int(r) for r in jumps)
        if list(jumps) != sorted(jumps):
            raise ValidationError("filtration jumps must be sorted increasingly")
        if jumps and (jumps[0] < 0 or jumps[-1] > ctx.p - 1):
            raise ValidationError(
                f"jumps {list(jumps)} outside the normalized window [0, {ctx.p - 1}]")
        if not isinstance(A, OFMatrix):
            A = OFMatrix(ctx, A)
        if A.ctx != ctx:
            raise ValidationError("matrix context mismatch")
        if A.rows != len(jumps) or A.cols != len(jumps):
            raise ValidationError("matrix size does not match the number of jumps")
        if not A.det().is_unit():
            raise ValidationError("A must be invertible over O_F (unit determinant)")
        self.ctx = ctx
        self.d = len(jumps)
        self.jumps = jumps
        self.A = A
        self.shift = int(shift)
        self._phi = None

    def __repr__(self):
        return (f"FilPhiModule(p={self.ctx.p}, d={self.d}, jumps={list(self.jumps)}, "
                f"shift={self.shift})")

    def __eq__(self, other):
        return (isinstance(other, FilPhiModule) and self.ctx == other.ctx
                and self.jumps == other.jumps and self.A == other.A
                and self.shift == other.shift)

    def __hash__(self):
        return hash((self.ctx, self.jumps, self.A, self.shift))

    def phi_matrix(self) -> OFMatrix:
        """Diag(p^{r_i}) * A: row i of A scaled by p^{r_i}."""
        if self._phi is None:
            ctx = self.ctx
            rows = []
            for r, row in zip(self.jumps, self.A.entries):
                scale = OFElement(ctx, pow(ctx.p, r, ctx.pN))
                rows.append([scale * e for e in row])
            self._phi = OFMatrix(ctx, rows)
        return self._phi

    def actual_jumps(self) -> tuple[int, ...]:
        return tuple(r + self.shift for r in self.jumps)

    def to_raw(self) -> "RawFilPhiModule":
        """Export: Phi in the adapted basis, filtration flags as identity rows."""
        ctx = self.ctx
        gens = []
        for level in range(self.jumps[-1] + 1 if self.jumps else 1):
            rows = [[1 if k == i else 0 for k in range(self.d)]
                    for i in range(self.d) if self.jumps[i] >= level]
            gens.append(OFMatrix(ctx, rows) if rows else None)
        return RawFilPhiModule(ctx, self.phi_matrix(), gens)


class RawFilPhiModule:
    """Phi in an arbitrary basis plus explicit filtration sublattices.

    fil_gens[i] is a matrix whose rows generate Fil^i (None for the zero
    lattice); levels beyond the list are zero.  Level 0 must generate the
    full lattice and the sublattices must decrease.
    """

    __slots__ = ("ctx", "d", "Phi", "fil_gens")

    def __init__(self, ctx: PrecisionContext, Phi: OFMatrix, fil_gens):
        if Phi.rows != Phi.cols:
            raise ValidationError("Phi must be square")
        self.ctx = ctx
        self.d = Phi.rows
        self.Phi = Phi
        gens = []
        for g in fil_gens:
            if g is None:
                gens.append(None)
            else:
                if not isinstance(g, OFMatrix):
                    g = OFMatrix(ctx, g)
                if g.cols != self.d:
                    raise ValidationError("filtration generator width mismatch")
                gens.append(g)
        self.fil_gens = tuple(gens)
        if not self.fil_gens or self.fil_gens[0] is None:
            raise ValidationError("Fil^0 must be the full lattice")
        for lower, higher in zip(self.fil_gens, self.fil_gens[1:]):
            if higher is None:
                continue
            if lower is None or not _lattice_contains_all(lower, higher):
                raise ValidationError("filtration sublattices must decrease")


# ---------------------------------------------------------------------------
# row-lattice helpers
# ---------------------------------------------------------------------------

def _row_basis(G: OFMatrix):
    """A basis of the row lattice of G: rows d_i * (V^{-1} row i) from the SNF.

    Returns (basis_matrix, exponents of the nonzero divisors)."""
    snf = smith_normal_form(G)
    vinv = snf.V.inverse()
    rows = []
    exps = []
    for i, e in enumerate(snf.exponents):
        if e is None:
            continue
        d_i = snf.D.entries[i][i]
        rows.append([d_i * x for x in vinv.entries[i]])
        exps.append(e)
    return OFMatrix(G.ctx, rows) if rows else None, exps


def _solve_in_basis(basis: OFMatrix, X: OFMatrix):
    """Coordinates C with C * basis == X, or None if X is not in the span.

    basis rows are a lattice basis (full row rank)."""
    snf = smith_normal_form(basis)
    r = len([e for e in snf.exponents if e is not None])
    if r != basis.rows:
        return None
    # basis = U^{-1} D V^{-1}; C * basis = X  <=>  (C U^{-1}) D = X V
    W = X * snf.V
    ctx = basis.ctx
    crows = []
    for xrow in W.entries:
        # columns beyond the rank must vanish for X to lie in the span
        if any(not x.is_zero() for x in xrow[basis.rows:]):
            return None
        crow = []
        for i in range(basis.rows):
            e = snf.exponents[i]
            d_i = snf.D.entries[i][i]
            val = xrow[i]
            if e:
                try:
                    val = val.divide_exact_p(e)
                except PrecisionLoss:
                    return None
                d_i = d_i.divide_exact_p(e)
            crow.append(val * d_i.unit_inverse())
        crows.append(crow)
    return OFMatrix(ctx, crows) * snf.U


def _lattice_contains_all(G: OFMatrix, X: OFMatrix) -> bool:
    basis, _ = _row_basis(G)
    if basis is None:
        return all(e.is_zero() for row in X.entries for e in row)
    return _solve_in_basis(basis, X) is not None


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------

def strong_divisibility_check(raw: RawFilPhiModule):
    """Whether the lattice equals the sum over i of p^{-i} phi(Fil^i).

    Returns (flag, adapted) where adapted is a FilPhiModule presentation
    extracted from the filtration flags, or None when the flags do not
    split off as direct summands (the sum condition can still hold then).
    """
    ctx = raw.ctx
    if len(raw.fil_gens) > ctx.p:
        for g in raw.fil_gens[ctx.p:]:
            if g is not None and g.rows > 0:
                raise ValidationError("filtration window exceeds [0, p-1]")
    stacked = []
    for level, gens in enumerate(raw.fil_gens):
        if gens is None:
            continue
        img = gens.frobenius_map() * raw.Phi if ctx.f > 1 else gens * raw.Phi
        for row in img.entries:
            try:
                stacked.append([e.divide_exact_p(level) for e in row] if level
                               else list(row))
            except PrecisionLoss:
                return False, None  # phi(Fil^i) not divisible by p^i
    snf = smith_normal_form(OFMatrix(ctx, stacked))
    full = (snf.rank == raw.d and all(e == 0 for e in snf.exponents[:raw.d]))
    if not full:
        return False, None
    adapted = _extract_adapted(raw)
    return True, adapted


def _extract_adapted(raw: RawFilPhiModule):
    """Adapted basis (jumps, A) from split filtration flags, top level down."""
    ctx = raw.ctx
    top = len(raw.fil_gens) - 1
    picked: list = []   # rows, deepest level first
    levels: list = []
    for level in range(top, -1, -1):
        gens = raw.fil_gens[level]
        if gens is None:
            continue
        basis, _ = _row_basis(gens)
        if basis is None:
            continue
        r = basis.rows
        if not picked:
            for row in basis.entries:
                picked.append(list(row))
                levels.append(level)
            continue
        if len(picked) == r:
            # equal rank: the flag must coincide with the span so far,
            # otherwise the jump at this level is not split
            if _solve_in_basis(OFMatrix(ctx, picked), basis) is None:
                return None
            continue
        C = _solve_in_basis(basis, OFMatrix(ctx, picked))
        if C is None:
            return None  # picked not inside this flag: inconsistent input
        snf = smith_normal_form(C)
        if snf.rank != len(picked) or any(e != 0 for e in snf.exponents):
            return None  # flag does not split
        vinv = snf.V.inverse()
        for i in range(len(picked), r):
            w_coords = vinv.entries[i]
            new_row = [sum((w_coords[k] * basis.entries[k][j] for k in range(r)),
                           OFElement(ctx, 0)) for j in range(raw.d)]
            picked.append(new_row)
            levels.append(level)
    if len(picked) != raw.d:
        return None
    # increasing jump order for the presentation
    order = list(range(raw.d))[::-1]
    B = OFMatrix(ctx, [picked[i] for i in order])
    jumps = tuple(levels[i] for i in order)
    try:
        phi_new = (B.frobenius_map() if ctx.f > 1 else B) * raw.Phi * B.inverse()
    except NotAUnit:
        return None
    rows = []
    for r_i, row in zip(jumps, phi_new.entries):
        try:
            rows.append([e.divide_exact_p(r_i) for e in row] if r_i else list(row))
        except PrecisionLoss:
            return None
    try:
        return FilPhiModule(ctx, jumps, OFMatrix(ctx, rows), shift=0)
    except ValidationError:
        return None


def unit_root_rank(D: FilPhiModule) -> int:
    """Rank of the slope-0 part; 0 certifies eligibility of the lattice
    constructor on the normalized presentation."""
    return semilinear_stable_rank(D.phi_matrix())


def top_slope_absent(D: FilPhiModule) -> bool:
    """Whether the operator has no part of slope r_d: the stabilized rank of
    p^{r_d} Phi^{-1} = A^{-1} Diag(p^{r_d - r_j}), an integral matrix,
    vanishes mod p."""
    ctx = D.ctx
    ainv = D.A.inverse()
    r_d = D.jumps[-1]
    cols = []
    for j in range(D.d):
        scale = OFElement(ctx, pow(ctx.p, r_d - D.jumps[j], ctx.pN))
        cols.append(scale)
    W = OFMatrix(ctx, [[ainv.entries[i][j] * cols[j] for j in range(D.d)]
                       for i in range(D.d)])
    return semilinear_stable_rank(W) == 0


def dual_twist(D: FilPhiModule, k: int) -> FilPhiModule:
    """The module of V*(k): jumps k - r (reversed), A' = J A^{-T} J, with the
    window slid back into [0, p-1] and the slide recorded in `shift`.

    Satisfies t_H(D') = k*d - t_H(D)."""
    ctx = D.ctx
    actual = [k - a for a in reversed(D.actual_jumps())]
    if actual[-1] - actual[0] > ctx.p - 1:
        raise WindowOverflow("dual window longer than p-1")  # unreachable: span preserved
    # slide the stored window only when the actual positions leave [0, p-1]
    if actual[0] < 0:
        shift = actual[0]
    elif actual[-1] > ctx.p - 1:
        shift = actual[-1] - (ctx.p - 1)
    else:
        shift = 0
    new_jumps = [x - shift for x in actual]
    d = D.d
    ainv_t = D.A.inverse().transpose()
    flipped = OFMatrix(ctx, [[ainv_t.entries[d - 1 - i][d - 1 - j] for j in range(d)]
                             for i in range(d)])
    return FilPhiModule(ctx, new_jumps, flipped, shift=shift)


def hodge_invariants(D: FilPhiModule):
    """Multiplicities h_j of the actual jump positions and t_H = sum j h_j.

    On the normalized presentation (shift 0), t_H = v_p(det Phi)."""
    h: dict[int, int] = {}
    for j in D.actual_jumps():
        h[j] = h.get(j, 0) + 1
    t_H = sum(j * m for j, m in h.items())
    return h, t_H


class CategoryFlags:
    """Membership in the slope-restricted subcategories (tight window)."""

    __slots__ = ("ab_star", "a_star_b", "both")

    def __init__(self, ab_star: bool, a_star_b: bool):
        self.ab_star = ab_star
        self.a_star_b = a_star_b
        self.both = ab_star and a_star_b

    def __repr__(self):
        return f"CategoryFlags(ab_star={self.ab_star}, a_star_b={self.a_star_b})"


def category_membership(D: FilPhiModule) -> CategoryFlags:
    return CategoryFlags(unit_root_rank(D) == 0, top_slope_absent(D))


def slopes(D: FilPhiModule):
    """Newton slopes of the stored Frobenius matrix (cross-check oracle for
    the mod-p membership tests)."""
    return newton_slopes(D.phi_matrix())
