"""Tamagawa-number and equivariant-determinant valuation calculus.

Everything here is bookkeeping of p-valuations of determinant lines
trivialized through exact sequences of lattices; unit parts are never
tracked (every verdict is a unit-ness statement).  Degenerate inputs
(nonvanishing H^0 on either side, non-integral twists, windows that do not
contain {0, 1}) raise Degenerate with a named reason instead of guessing.

Restricted to f = 1: the determinant convention for semilinear operators
over a larger unramified base is not pinned down.
"""

from __future__ import annotations

from fractions import Fraction

from .errors import Degenerate, NotExact, PrecisionLoss
from .filmod import FilPhiModule, dual_twist, hodge_invariants
from .padic import OFElement, OFMatrix, smith_normal_form, vp_fraction, vp_int


# ---------------------------------------------------------------------------
# modified Gamma factors
# ---------------------------------------------------------------------------

class GammaStarValue:
    """Gamma*(j) = (j-1)! for j >= 1 and (-1)^j/(-j)! for j <= 0, with its
    p-valuation by Legendre's formula."""

    __slots__ = ("j", "value", "v_p")

    def __init__(self, j: int, value: Fraction, v_p: int):
        self.j, self.value, self.v_p = j, value, v_p

    def __repr__(self):
        return f"GammaStar(j={self.j}, value={self.value}, v_p={self.v_p})"


def _factorial_vp(n: int, p: int) -> int:
    """Legendre: v_p(n!) = sum_k floor(n / p^k)."""
    v = 0
    q = p
    while q <= n:
        v += n // q
        q *= p
    return v


def gamma_star(j: int, p: int) -> GammaStarValue:
    import math
    if j >= 1:
        val = Fraction(math.factorial(j - 1))
        v = _factorial_vp(j - 1, p)
    else:
        sign = 1 if j % 2 == 0 else -1
        val = Fraction(sign, math.factorial(-j))
        v = -_factorial_vp(-j, p)
    return GammaStarValue(j, val, v)


def gamma_star_window_unit(a: int, b: int, p: int) -> bool:
    """Whether Gamma*(-j) is a p-adic unit for every j in [a, b]."""
    return all(gamma_star(-j, p).v_p == 0 for j in range(a, b + 1))


# ---------------------------------------------------------------------------
# determinant valuations of 1 - phi and of -phi on the dual
# ---------------------------------------------------------------------------

def _require_f1(D: FilPhiModule):
    if D.ctx.f > 1:
        raise Degenerate("operation restricted to f = 1", reason="f>1")


def det_one_minus_phi(D: FilPhiModule):
    """det(1 - Phi) and its valuation; valuation None means 0 at precision
    (a fixed vector may exist: degenerate case)."""
    _require_f1(D)
    ctx = D.ctx
    m = OFMatrix.identity(ctx, D.d) - D.phi_matrix()
    det = m.det()
    return det, det.valuation()


def det_phi_minus_p(D: FilPhiModule):
    """det(Phi - p) and its valuation; up to the unit det(Phi)/p^{t_H} this
    carries det(1 - p Phi^{-1}), the dual-side fixed-vector test."""
    _require_f1(D)
    ctx = D.ctx
    pid = OFMatrix.identity(ctx, D.d).map(lambda e: e * ctx.p)
    det = (D.phi_matrix() - pid).det()
    return det, det.valuation()


def det_minus_phi_dual(D: FilPhiModule):
    """det(-phi | dual twist by 1) = (-p)^d / det(Phi) as an exact rational
    built from the stored representative; v_p = d - t_H is exact."""
    _require_f1(D)
    ctx = D.ctx
    det = D.phi_matrix().det()
    dv = det.valuation()
    if dv is None:
        raise PrecisionLoss("det(Phi) is 0 at precision")
    _, t_H = hodge_invariants(D)
    # det(Phi_actual) = p^{d*shift} det(Phi_stored)
    value = Fraction((-ctx.p) ** D.d, det.coeffs[0]) / Fraction(ctx.p) ** (D.d * D.shift)
    return value, D.d - t_H


def eta_exponent(D: FilPhiModule, omega_scaling_vp: int = 0) -> int:
    """Valuation of the comparison-line normalization.

    For the lattice induced by the module itself the comparison determinant
    is t^{t_H} times a unit, so the contribution is 0; rescaling the chosen
    base by p^k shifts it by k."""
    return omega_scaling_vp


# ---------------------------------------------------------------------------
# exact sequence ladders
# ---------------------------------------------------------------------------

class ExactSequenceLadder:
    """A chain 0 -> L_0 -> L_1 -> ... -> L_k -> 0 of free-lattice maps,
    exact after inverting p.

    Maps are matrices in the column convention (map i sends L_{i-1} to L_i,
    shape rank(L_i) x rank(L_{i-1})); consecutive maps must compose to 0 at
    precision.  Lattice labels are kept for report output only.
    """

    def __init__(self, maps, labels=None):
        if not maps:
            raise ValueError("empty ladder")
        self.maps = list(maps)
        for f, g in zip(self.maps, self.maps[1:]):
            if g.cols != f.rows:
                raise NotExact("chain shape mismatch")
            comp = g * f
            if any(not e.is_zero() for row in comp.entries for e in row):
                raise NotExact("consecutive maps do not compose to zero")
        self.labels = list(labels) if labels else [f"L{i}" for i in
                                                   range(len(self.maps) + 1)]

    def ranks(self):
        return [self.maps[0].cols] + [f.rows for f in self.maps]


def _saturated_kernel(f: OFMatrix):
    """Basis of the saturated kernel lattice of f, as columns (from the SNF
    change of basis: columns of V matching zero-at-precision divisors)."""
    snf = smith_normal_form(f)
    n = f.cols
    cols = [i for i in range(n)
            if i >= len(snf.exponents) or snf.exponents[i] is None]
    if not cols:
        return None
    ctx = f.ctx
    entries = [[snf.V.entries[i][j] for j in cols] for i in range(n)]
    return OFMatrix(ctx, entries)


def _finite_index_in(K: OFMatrix, img: OFMatrix) -> int:
    """length of K-lattice / column-span(img); img columns must lie in the
    span of K's columns up to precision."""
    snf = smith_normal_form(K)
    if any(e != 0 for e in snf.exponents):
        raise NotExact("kernel basis not primitive")
    # coordinates: K X = img  =>  X = V D^{-1} U img (unit divisors)
    lifted = snf.U * img
    r = K.cols
    for i in range(r, K.rows):
        if any(not e.is_zero() for e in lifted.entries[i]):
            raise NotExact("image does not lie in the kernel of the next map")
    coords = OFMatrix(K.ctx, lifted.entries[:r])
    dinv = [snf.D.entries[i][i].unit_inverse() for i in range(r)]
    coords = OFMatrix(K.ctx, [[dinv[i] * e for e in coords.entries[i]]
                              for i in range(r)])
    coords = snf.V * coords
    sub = smith_normal_form(coords)
    if sub.rank != r:
        raise NotExact("rank drop: sequence not exact after inverting p")
    return sum(e for e in sub.exponents if e is not None)


def exact_sequence_exponent(L: ExactSequenceLadder, base: str | None = None) -> int:
    """p-valuation of the canonical trivialization of the alternating
    determinant line, as an alternating sum of finite homology lengths.

    Signs are normalized so that 0 -> M --p.id--> M -> coker -> 0 measured
    against det(coker) yields +rank(M); the value is additive under direct
    sums and invariant under unimodular base change of any lattice.
    """
    maps = L.maps
    k = len(maps)
    ranks = L.ranks()
    lengths = []
    # position 0: kernel of the first map must vanish at precision
    snf0 = smith_normal_form(maps[0])
    if snf0.rank != ranks[0]:
        raise NotExact("first map has a kernel: not exact at the left end")
    lengths.append(0)
    for i in range(1, k):
        ker = _saturated_kernel(maps[i])
        rank_prev = smith_normal_form(maps[i - 1]).rank
        ker_rank = 0 if ker is None else ker.cols
        if rank_prev != ker_rank:
            raise NotExact(f"rank bookkeeping fails at position {i}")
        if ker is None:
            lengths.append(0)
        else:
            lengths.append(_finite_index_in(ker, maps[i - 1]))
    # rightmost position: coker of the last map
    snf_last = smith_normal_form(maps[-1])
    if snf_last.rank != ranks[-1]:
        raise NotExact("last map is not surjective after inverting p")
    lengths.append(sum(e for e in snf_last.exponents if e is not None))
    total = 0
    for i, ell in enumerate(lengths):
        sign = 1 if (k - i) % 2 == 0 else -1
        total += sign * ell
    return total


# ---------------------------------------------------------------------------
# Tamagawa exponents
# ---------------------------------------------------------------------------

def _window_contains_01(D: FilPhiModule) -> bool:
    """Some window [a; b] with a <= 0 < 1 <= b and b - a <= p - 1 contains
    all actual jump positions (jumps sit at -weights, window at [-b, -a])."""
    act = D.actual_jumps()
    hi = max(1, -min(act))
    lo = min(0, -max(act))
    return hi - lo <= D.ctx.p - 1


def tam_exponent(D: FilPhiModule) -> int:
    """Valuation of the Tamagawa coefficient of the stored lattice.

    Generic case only: det(1 - Phi) and det(Phi - p) (the latter carrying
    det(1 - p Phi^{-1})) must both be nonzero at precision, and an
    admissible window must contain {0, 1}.  The twist bookkeeping enters
    through the Fil^0 cutoff: Fil^0 M is spanned by the basis vectors whose
    actual jump position r_i + shift is >= 0.

    The quotient C = M/(1-phi)Fil^0 M carries a torsion part, counted by the
    elementary divisors of the Fil^0 rows of 1 - Phi, and a free part
    compared against M/Fil^0 M through z -> -pr((1-phi)^{-1} z); the
    exponent is the torsion length plus the valuation of that comparison
    determinant.
    """
    _require_f1(D)
    ctx = D.ctx
    p = ctx.p
    if not _window_contains_01(D):
        raise Degenerate("no admissible window contains {0, 1}", reason="window")
    _, v1 = det_one_minus_phi(D)
    if v1 is None:
        raise Degenerate("det(1 - phi) is 0 at precision: H^0 may be nonzero",
                         reason="H0")
    _, vdual = det_phi_minus_p(D)
    if vdual is None:
        raise Degenerate("det(1 - p phi^{-1}) is 0 at precision: the dual-side "
                         "H^0 may be nonzero", reason="H0-dual")
    acts = D.actual_jumps()
    fil0 = [i for i in range(D.d) if acts[i] >= 0]
    quot = [i for i in range(D.d) if acts[i] < 0]
    phi = D.phi_matrix()
    one_minus = OFMatrix.identity(ctx, D.d) - phi
    tors = 0
    beta = None
    if fil0:
        beta = OFMatrix(ctx, [list(one_minus.entries[i]) for i in fil0])
        snf = smith_normal_form(beta)
        exps = list(snf.exponents)
        if any(e is None for e in exps):
            raise Degenerate("(1-phi)|Fil^0 drops rank at precision",
                             reason="fil0-rank")
        tors = sum(exps)
    if not quot:
        return tors
    # free-part comparison over exact rationals on canonical representatives
    if 2 * (v1 + 1) > ctx.N:
        raise PrecisionLoss("N too small to trust the free-part comparison")
    W = _rational_inverse([[Fraction(e.coeffs[0]) for e in row]
                           for row in one_minus.entries])
    if beta is not None:
        basis = _cokernel_free_basis(beta)
    else:
        basis = [[Fraction(1 if i == j else 0) for j in range(D.d)]
                 for i in range(D.d)]
    psi = []
    for vec in basis:
        img = [sum(vec[j] * W[j][i] for j in range(D.d)) for i in range(D.d)]
        psi.append([-img[i] for i in quot])
    det = _rational_det(psi)
    if det == 0:
        raise Degenerate("free-part comparison is singular", reason="psi-singular")
    return tors + vp_fraction(det, p)


def _cokernel_free_basis(beta: OFMatrix):
    """Rational coordinates (rows) of a basis of the free part of the
    quotient of the ambient lattice by the row span of beta: the trailing
    rows of V^{-1} from the SNF of beta."""
    snf = smith_normal_form(beta)
    vinv = snf.V.inverse()
    out = []
    for j in range(beta.rows, beta.cols):
        out.append([Fraction(e.coeffs[0]) for e in vinv.entries[j]])
    return out


def _rational_inverse(m):
    n = len(m)
    a = [[Fraction(m[i][j]) for j in range(n)] +
         [Fraction(1 if i == j else 0) for j in range(n)] for i in range(n)]
    for c in range(n):
        piv = next((i for i in range(c, n) if a[i][c] != 0), None)
        if piv is None:
            raise Degenerate("singular matrix in rational inverse", reason="singular")
        a[c], a[piv] = a[piv], a[c]
        pv = a[c][c]
        a[c] = [x / pv for x in a[c]]
        for i in range(n):
            if i != c and a[i][c] != 0:
                f = a[i][c]
                a[i] = [x - f * y for x, y in zip(a[i], a[c])]
    return [row[n:] for row in a]


def _rational_det(m):
    n = len(m)
    if n == 0:
        return Fraction(1)
    a = [[Fraction(x) for x in row] for row in m]
    det = Fraction(1)
    for c in range(n):
        piv = next((i for i in range(c, n) if a[i][c] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != c:
            a[c], a[piv] = a[piv], a[c]
            det = -det
        det *= a[c][c]
        pv = a[c][c]
        for i in range(c + 1, n):
            if a[i][c] != 0:
                f = a[i][c] / pv
                a[i] = [x - f * y for x, y in zip(a[i], a[c])]
    return det


# ---------------------------------------------------------------------------
# the two exponent expressions
# ---------------------------------------------------------------------------

class CepReport:
    """Both sides of the lattice-exponent identity, component by component."""

    __slots__ = ("tam_exponent_V", "tam_exponent_dual", "det_minus_phi_dual_vp",
                 "gamma_star_total_vp", "eta_exponent", "cep_lattice_exponent",
                 "verdict")

    def __init__(self, tam_V, tam_dual, det_vp, gamma_vp, eta, exponent, verdict):
        self.tam_exponent_V = tam_V
        self.tam_exponent_dual = tam_dual
        self.det_minus_phi_dual_vp = det_vp
        self.gamma_star_total_vp = gamma_vp
        self.eta_exponent = eta
        self.cep_lattice_exponent = exponent
        self.verdict = verdict

    def as_dict(self):
        return {
            "tam_exponent_V": self.tam_exponent_V,
            "tam_exponent_dual": self.tam_exponent_dual,
            "det_minus_phi_dual_vp": self.det_minus_phi_dual_vp,
            "gamma_star_total_vp": self.gamma_star_total_vp,
            "eta_exponent": self.eta_exponent,
            "cep_lattice_exponent": self.cep_lattice_exponent,
            "verdict": self.verdict,
        }


def cep_check(D: FilPhiModule) -> CepReport:
    """Compare the Gamma*-form and the Tamagawa-ratio form of the lattice
    exponent; verdict is their agreement.

    Gamma*-form:   v(det(-phi | dual)) - sum_j h_j v(Gamma*(-j)) + eta
    Tam-ratio:     v(det(-phi | dual)) + Tam(V) - Tam(dual)

    Under both slope conditions with the window inside [-(p-2), p-1] all
    components vanish except the shared determinant term.
    """
    _require_f1(D)
    p = D.ctx.p
    h, _ = hodge_invariants(D)
    window_ok = all(-(p - 2) <= j <= p - 1 for j in h)
    if not window_ok:
        raise Degenerate("actual weights leave [-(p-2), p-1]", reason="gamma-window")
    _, det_vp = det_minus_phi_dual(D)
    gamma_vp = -sum(mult * gamma_star(-j, p).v_p for j, mult in h.items())
    eta = eta_exponent(D)
    tam_V = tam_exponent(D)
    tam_dual = tam_exponent(dual_twist(D, 1))
    lhs = det_vp + gamma_vp + eta
    rhs = det_vp + tam_V - tam_dual
    return CepReport(tam_V, tam_dual, det_vp, gamma_vp, eta, lhs, lhs == rhs)
