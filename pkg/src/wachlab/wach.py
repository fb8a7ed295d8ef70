"""Constructive lattice data over A+_F for an eligible filtered module.

Given a normalized strongly divisible module (jumps r_i, matrix A) whose
operator has no unit-root part (or no top-slope part), this module builds

    P = Diag((q mu)^{r_1}, ..., (q mu)^{r_d}) A,

congruent to Diag(p^{r_i}) A mod pi^{p-1}, and solves

    H - q^{p-1} gamma(P^{-1}) phi(H) P = Q an    with    gamma(P^{-1}) P = Id + pi^{p-1} Q

by the fixed-point iteration H <- Q + L(H), monitored by the combined
(p, pi)-valuation of successive differences.  The group action on the new
lattice is G = Id + pi^{p-1} H, and the defining relation
gamma(P) G = phi(G) P is re-verified by direct substitution.

P^{-1} itself is not integral (det P has constant term a power of p), so
every stored series goes through exact factorizations:

    gamma(q) = q * S / pi_c,   S = ((1+pi)^{pc} - 1)/((1+pi)^p - 1),
    pi_c = ((1+pi)^c - 1)/pi,  q mu = p + pi^{p-1} mu,

with S and pi_c integral of unit constant term c.
"""

from __future__ import annotations

from .errors import CongruenceFailure, NonConvergence
from ._kernel import get_kernel
from .aplus import (
    APlusSeries,
    binomial_column,
    exact_div_pi,
    gamma_series,
    invert_series,
    mu_series,
    phi_series,
    q_mu_series,
    q_series,
    shift_pi,
)
from .filmod import FilPhiModule
from .padic import OFElement, OFMatrix


def default_order(ctx) -> int:
    """Working pi-truncation 2(p-1)N: pi^{p-1}-divisions never dominate the
    error budget at absolute precision N."""
    return 2 * (ctx.p - 1) * ctx.N


# ---------------------------------------------------------------------------
# matrices of series (small d: plain lists of APlusSeries)
# ---------------------------------------------------------------------------

def mat_identity(ctx, d, order):
    one = APlusSeries.one(ctx, order)
    zero = APlusSeries.zero(ctx, order)
    return [[one if i == j else zero for j in range(d)] for i in range(d)]

def mat_mul(A, B):
    d = len(A)
    m = len(B[0])
    return [[_dot(A[i], [B[k][j] for k in range(len(B))]) for j in range(m)]
            for i in range(d)]

def _dot(row, col):
    acc = row[0] * col[0]
    for a, b in zip(row[1:], col[1:]):
        acc = acc + a * b
    return acc

def mat_sub(A, B):
    return [[a - b for a, b in zip(r1, r2)] for r1, r2 in zip(A, B)]

def mat_map(A, fn):
    return [[fn(e) for e in row] for row in A]

def mat_is_zero(A) -> bool:
    return all(e.pi_valuation() is None for row in A for e in row)

def mat_combined_valuation(A, weight):
    """min over entries and coefficients of i + weight * v_p(c_i); None when
    the matrix is 0 at truncation."""
    best = None
    for row in A:
        for s in row:
            for i, c in enumerate(s.coeffs):
                if best is not None and i >= best:
                    break
                v = c.valuation()
                if v is None:
                    continue
                w = i + weight * v
                if best is None or w < best:
                    best = w
    return best


# ---------------------------------------------------------------------------
# the structured ingredients
# ---------------------------------------------------------------------------

class _Ingredients:
    """Everything that depends only on (ctx, order, c): shared by all modules
    with the same prime and working precision."""

    def __init__(self, ctx, order, c):
        p = ctx.p
        self.ctx, self.order, self.c = ctx, order, c
        self.q = q_series(ctx, order)
        self.mu = mu_series(ctx, order)
        self.qmu = q_mu_series(ctx, order)
        self.mu_inv = invert_series(self.mu)
        self.qmu_gamma = gamma_series(self.qmu, c)  # nu = gamma(q mu)
        # pi_c = ((1+pi)^c - 1)/pi
        col = binomial_column(c, order, ctx.pN)
        self.pi_c = APlusSeries(ctx, order, col[1:])
        # S = ((1+pi)^{pc}-1)/((1+pi)^p-1) = sum_{k>=1} C(c,k) (pi q)^{k-1}
        phi_pi = phi_series(APlusSeries.pi(ctx, order))
        S = APlusSeries.zero(ctx, order)
        power = APlusSeries.one(ctx, order)
        for k in range(1, order + 1):
            ck = col[k] if k < len(col) else 0
            if ck:
                S = S + power * OFElement(ctx, ck)
            if k <= order - 1:
                power = power * phi_pi
                if power.pi_valuation() is None:
                    break
        self.S = S
        # rho = q / gamma(q mu) = pi_c * S^{-1} * gamma(mu^{-1})
        self.rho = self.pi_c * invert_series(S) * gamma_series(self.mu_inv, c)
        # tau = q mu / gamma(q mu), congruent to 1 mod pi^{p-1}
        self.tau = self.rho * self.mu
        self.q_powers = _powers(self.q, p)
        self.rho_powers = _powers(self.rho, p)
        self.tau_powers = _powers(self.tau, p)
        self.qmu_powers = _powers(self.qmu, p)
        self.nu_powers = _powers(self.qmu_gamma, p)
        self.muinv_powers = _powers(self.mu_inv, p)


def _powers(s, p):
    """s^0 .. s^{p-1} (jumps never exceed p-1)."""
    out = [APlusSeries.one(s.ctx, s.order)]
    for _ in range(p - 1):
        out.append(out[-1] * s)
    return out


_ingredient_cache: dict = {}


def _ingredients(ctx, order, c) -> _Ingredients:
    key = (ctx, order, c)
    v = _ingredient_cache.get(key)
    if v is None:
        v = _ingredient_cache[key] = _Ingredients(ctx, order, c)
    return v


# ---------------------------------------------------------------------------
# construction
# ---------------------------------------------------------------------------

def build_P(D: FilPhiModule, order: int | None = None):
    """P = Diag((q mu)^{r_i}) A; congruent to the Frobenius matrix of D
    mod pi^{p-1} because (q mu)^s = p^s there."""
    ctx = D.ctx
    order = order or default_order(ctx)
    qmu_pows = _powers(q_mu_series(ctx, order), ctx.p)
    return [[qmu_pows[D.jumps[i]] * D.A.entries[i][j] for j in range(D.d)]
            for i in range(D.d)]


def compute_Q(D: FilPhiModule, c: int, order: int | None = None):
    """Q = (gamma(P^{-1}) P - Id)/pi^{p-1}.

    gamma(P^{-1})P = A^{-1} Diag(tau^{r_i}) A with tau = q mu / gamma(q mu);
    the congruence tau^r = 1 mod pi^{p-1} is verified first and its failure
    raises CongruenceFailure (it is a theorem, so failure means a bug or a
    precision shortfall).
    """
    ctx = D.ctx
    order = order or default_order(ctx)
    ing = _ingredients(ctx, order, c)
    p = ctx.p
    diag = []
    for r in sorted(set(D.jumps)):
        t = ing.tau_powers[r]
        for i in range(1, p - 1):
            if not t.coeffs[i].is_zero():
                raise CongruenceFailure(
                    f"gamma(P^-1)P != Id mod pi^{p - 1} at jump {r}")
        if not (t.coeffs[0] - OFElement(ctx, 1)).is_zero():
            raise CongruenceFailure("gamma(P^-1)P has wrong constant term")
    one = APlusSeries.one(ctx, order)
    wdiag = {r: exact_div_pi(ing.tau_powers[r] - one, p - 1)
             for r in set(D.jumps)}
    ainv = D.A.inverse()
    d = D.d
    out = []
    for i in range(d):
        row = []
        for j in range(d):
            acc = None
            for k in range(d):
                scal = ainv.entries[i][k] * D.A.entries[k][j]
                term = wdiag[D.jumps[k]] * scal
                acc = term if acc is None else acc + term
            row.append(acc)
        out.append(row)
    return out


def _iteration_data(D: FilPhiModule, c: int, order: int):
    """P, the iteration matrix C = q^{p-1} gamma(P^{-1}) = A^{-1} Diag(z_r),
    and Q, all integral by the factorization z_r = q^{p-1-r} rho^r.

    Q lives at order - (p-1) (it is an exact pi^{p-1}-quotient), and the
    H-equation is solved there; P and C are truncated to match."""
    ctx = D.ctx
    ing = _ingredients(ctx, order, c)
    p = ctx.p
    mh = order - (p - 1)
    if mh < 1:
        raise ValueError(f"order must exceed p-1 = {p - 1}")
    ainv = D.A.inverse()
    z = {r: (ing.q_powers[p - 1 - r] * ing.rho_powers[r]).truncate(mh)
         for r in set(D.jumps)}
    d = D.d
    C = [[ainv.entries[i][j] * z[D.jumps[j]] for j in range(d)] for i in range(d)]
    P = [[(ing.qmu_powers[D.jumps[i]]).truncate(mh) * D.A.entries[i][j]
          for j in range(d)] for i in range(d)]
    Q = compute_Q(D, c, order)
    return P, C, Q, mh


def solve_H(D: FilPhiModule, c: int, order: int | None = None,
            initial=None):
    """Solve H - q^{p-1} gamma(P^{-1}) phi(H) P = Q by fixed-point iteration.

    Convergence holds when the operator has no unit-root part, or no part of
    top slope (each iteration then gains combined (p, pi)-valuation).  The
    residual monitor raises NonConvergence when the valuation of successive
    differences fails to improve across a window of d*f*N iterations.

    `initial` overrides the starting matrix (used by the uniqueness tests);
    the fixed point does not depend on it.

    Returns (H, iterations).
    """
    ctx = D.ctx
    order = order or default_order(ctx)
    P, C, Q, mh = _iteration_data(D, c, order)
    d = D.d
    window = max(d * ctx.f * ctx.N, 4)
    weight = ctx.p - 1
    cap = window * ((ctx.p - 1) * ctx.N + order + 2)
    if ctx.f == 1:
        ker = get_kernel(ctx.p, ctx.N, mh)
        table = ker.power_table(("phi",), lambda: [0] + q_series(ctx, mh).raw()[:mh - 1])
        Cp = [[ker.pack(e.raw()) for e in row] for row in C]
        Pp = [[ker.pack(e.raw()) for e in row] for row in P]
        Qraw = [[e.raw() for e in row] for row in Q]
        if initial is None:
            H = Qraw
        else:
            H = [[(e.raw() + [0] * mh)[:mh] for e in row] for row in initial]
        pN = ctx.pN
        best = -1
        stale = 0
        iterations = 0
        while True:
            iterations += 1
            if iterations > cap:
                raise NonConvergence("iteration cap exceeded", reason="cap")
            phiH = [[ker.combo(H[i][j], table) for j in range(d)] for i in range(d)]
            T = ker.mat_mul(Cp, phiH, d)
            L = ker.mat_mul(T, Pp, d)
            Hnew = []
            delta_w = None
            for i in range(d):
                row = []
                for j in range(d):
                    lij = ker.unpack(L[i][j])
                    qij = Qraw[i][j]
                    new = [(a + b) % pN for a, b in zip(qij, lij)]
                    row.append(new)
                    old = H[i][j]
                    for idx in range(mh):
                        if delta_w is not None and idx >= delta_w:
                            break
                        diff = new[idx] - old[idx]
                        if diff % pN:
                            v = 0
                            diff %= pN
                            while diff % ctx.p == 0:
                                diff //= ctx.p
                                v += 1
                            w = idx + weight * v
                            if delta_w is None or w < delta_w:
                                delta_w = w
                Hnew.append(row)
            if delta_w is None:
                H = Hnew
                break
            if delta_w > best:
                best = delta_w
                stale = 0
            else:
                stale += 1
                if stale >= window:
                    raise NonConvergence(
                        f"residual valuation stalled at {best} for {window} "
                        f"iterations (slope hypothesis violated?)")
            H = Hnew
        Hmat = [[APlusSeries(ctx, mh, H[i][j]) for j in range(d)] for i in range(d)]
        return Hmat, iterations
    # generic (f > 1) path: same loop over APlusSeries matrices
    H = Q if initial is None else initial
    best = -1
    stale = 0
    iterations = 0
    while True:
        iterations += 1
        if iterations > cap:
            raise NonConvergence("iteration cap exceeded", reason="cap")
        phiH = mat_map(H, phi_series)
        Hnew = [[_dot(row, col) for col in zip(*P)] for row in mat_mul(C, phiH)]
        Hnew = [[q + l for q, l in zip(qrow, lrow)] for qrow, lrow in zip(Q, Hnew)]
        diff = mat_sub(Hnew, H)
        H = Hnew
        w = mat_combined_valuation(diff, weight)
        if w is None:
            break
        if w > best:
            best = w
            stale = 0
        else:
            stale += 1
            if stale >= window:
                raise NonConvergence(
                    f"residual valuation stalled at {best} for {window} iterations")
    return H, iterations


class WachData:
    """The constructed lattice data: P, Q, H, G and the achieved residual."""

    __slots__ = ("D", "c", "P", "Q", "H", "G", "residual_valuation",
                 "residual_zero", "iterations", "order")

    def __init__(self, D, c, P, Q, H, G, residual_valuation, residual_zero,
                 iterations, order):
        self.D, self.c = D, c
        self.P, self.Q, self.H, self.G = P, Q, H, G
        self.residual_valuation = residual_valuation
        self.residual_zero = residual_zero
        self.iterations = iterations
        self.order = order

    def __repr__(self):
        return (f"WachData(d={self.D.d}, c={self.c}, order={self.order}, "
                f"residual_zero={self.residual_zero}, iter={self.iterations})")


def gamma_matrix(D: FilPhiModule, c: int, order: int | None = None,
                 initial=None) -> WachData:
    """Assemble G = Id + pi^{p-1} H and re-verify gamma(P) G = phi(G) P by
    direct substitution (independent of the solver's internal identities)."""
    ctx = D.ctx
    order = order or default_order(ctx)
    ing = _ingredients(ctx, order, c)
    d = D.d
    P = [[ing.qmu_powers[D.jumps[i]] * D.A.entries[i][j] for j in range(d)]
         for i in range(d)]
    Q = compute_Q(D, c, order)
    H, iterations = solve_H(D, c, order, initial=initial)
    # G = Id + pi^{p-1} H is known one pi^{p-1}-step beyond H's order
    ident = mat_identity(ctx, d, order)
    G = [[g + shift_pi(h, ctx.p - 1) for g, h in zip(grow, hrow)]
         for grow, hrow in zip(ident, H)]
    gammaP = [[ing.nu_powers[D.jumps[i]] * D.A.entries[i][j] for j in range(d)]
              for i in range(d)]
    lhs = mat_mul(gammaP, G)
    rhs = mat_mul(mat_map(G, phi_series), P)
    residual = mat_sub(lhs, rhs)
    zero = mat_is_zero(residual)
    rv = mat_combined_valuation(residual, ctx.p - 1)
    return WachData(D, c, P, Q, H, G, rv, zero, iterations, order)


def check_cocycle(D: FilPhiModule, c1: int, c2: int,
                  order: int | None = None) -> bool:
    """G_{c1 c2} == gamma_{c2}(G_{c1}) G_{c2} in the fixed basis (operator
    composition in the row convention)."""
    order = order or default_order(D.ctx)
    W1 = gamma_matrix(D, c1, order)
    W2 = gamma_matrix(D, c2, order)
    W12 = gamma_matrix(D, c1 * c2, order)
    lhs = W12.G
    rhs = mat_mul(mat_map(W1.G, lambda s: gamma_series(s, c2)), W2.G)
    return mat_is_zero(mat_sub(lhs, rhs))


def check_q_cokernel(W: WachData) -> bool:
    """q^{r_d} P^{-1} is integral: certified by constructing the candidate
    A^{-1} Diag(q^{r_d - r_i} mu^{-r_i}) and verifying its product with P is
    q^{r_d} Id at truncation."""
    D = W.D
    ctx = D.ctx
    order = W.order
    ing = _ingredients(ctx, order, W.c)
    r_top = D.jumps[-1]
    ainv = D.A.inverse()
    d = D.d
    cand = [[ainv.entries[i][j] * (ing.q_powers[r_top - D.jumps[j]]
                                   * ing.muinv_powers[D.jumps[j]])
             for j in range(d)] for i in range(d)]
    prod = mat_mul(cand, W.P)
    target = [[ing.q_powers[r_top] if i == j else APlusSeries.zero(ctx, order)
               for j in range(d)] for i in range(d)]
    return mat_is_zero(mat_sub(prod, target))


def apply_Ti(W: WachData, i: int):
    """Matrix (rows = images of basis vectors) of the twisted averaging
    operator (1 - c^{-1} g)(1 - c^{-2} g) ... (1 - c^{-(i-1)} g), where g is
    the group element acting through G; reduction mod pi is the scalar
    prod_k (1 - c^{-k})."""
    if not 1 <= i <= W.D.ctx.p - 1:
        raise ValueError("i must lie in [1, p-1]")
    ctx = W.D.ctx
    d = W.D.d
    X = mat_identity(ctx, d, W.order)
    cinv = OFElement(ctx, W.c).unit_inverse()
    for k in range(i - 1, 0, -1):
        scal = cinv
        for _ in range(k - 1):
            scal = scal * cinv
        gX = mat_mul(mat_map(X, lambda s: gamma_series(s, W.c)), W.G)
        X = mat_sub(X, mat_map(gX, lambda s: s * scal))
    return X


def ti_scalar(ctx, c: int, i: int):
    """The mod-pi scalar prod_{k=1}^{i-1} (1 - c^{-k}) and its valuation.

    For the pro-cyclic generator c = 1 + p the factor 1 - c^{-1} has
    valuation 1, so the scalar need not be a unit; it is reported, not
    asserted."""
    cinv = OFElement(ctx, c).unit_inverse()
    acc = OFElement(ctx, 1)
    power = OFElement(ctx, 1)
    for _ in range(1, i):
        power = power * cinv
        acc = acc * (OFElement(ctx, 1) - power)
    return acc, acc.valuation()
