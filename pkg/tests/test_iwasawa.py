"""Idempotent algebra, the twist automorphism, logarithm elements,
evaluation, and unit criteria at finite T-truncation."""

import random
from fractions import Fraction

import pytest

from wachlab import NotIntegral
from wachlab.iwasawa import (
    IwasawaContext,
    IwasawaElement,
    delta_twist_consistency,
    ell,
    eval_at_zero,
    evaluate_component,
    idempotent,
    is_lambda_unit,
    log_one_plus_p,
    twist1,
    twist_minus1,
)
from wachlab.padic import vp_fraction


def rand_element(ctx, rng, integral=True, unit=False):
    comps = []
    for _ in range(ctx.p - 1):
        if integral:
            row = [Fraction(rng.randrange(-50, 50)) for _ in range(ctx.M_T)]
        else:
            row = [Fraction(rng.randrange(-50, 50), rng.choice([1, 1, ctx.p]))
                   for _ in range(ctx.M_T)]
        if unit:
            c = rng.randrange(1, 50)
            while c % ctx.p == 0:
                c = rng.randrange(1, 50)
            row[0] = Fraction(c)
        comps.append(row)
    return IwasawaElement(ctx, comps)


class TestIdempotents:
    def test_sum_is_one(self):
        ctx = IwasawaContext(3, 8)
        total = idempotent(ctx, 0) + idempotent(ctx, 1)
        assert total == IwasawaElement.one(ctx)

    def test_orthogonal(self):
        ctx = IwasawaContext(5, 8)
        for i in range(4):
            for j in range(4):
                prod = idempotent(ctx, i) * idempotent(ctx, j)
                expected = idempotent(ctx, i) if i == j else IwasawaElement.zero(ctx)
                assert prod == expected

    def test_sum_all_p5(self):
        ctx = IwasawaContext(5, 6)
        total = IwasawaElement.zero(ctx)
        for i in range(4):
            total = total + idempotent(ctx, i)
        assert total == IwasawaElement.one(ctx)


class TestTwist:
    def test_one_maps_to_one(self):
        # group-like elements keep all components equal; the constant 1 of
        # the group algebra is fixed
        ctx = IwasawaContext(3, 8)
        assert twist1(IwasawaElement.one(ctx)) == IwasawaElement.one(ctx)

    def test_gamma1_scales(self):
        # gamma_1 = 1 + T (all components): Tw(gamma_1) = (1+p)(1+T)
        ctx = IwasawaContext(3, 8)
        g1 = IwasawaElement(ctx, [[1, 1] for _ in range(2)])
        tw = twist1(g1)
        expected = IwasawaElement(ctx, [[4, 4] for _ in range(2)])
        assert tw == expected

    def test_roundtrip_exact(self):
        rng = random.Random(21)
        for p in (3, 5, 7):
            ctx = IwasawaContext(p, 12)
            for _ in range(40):
                x = rand_element(ctx, rng, integral=False)
                assert twist_minus1(twist1(x)) == x
                assert twist1(twist_minus1(x)) == x

    def test_additive_bit_exact(self):
        rng = random.Random(22)
        ctx = IwasawaContext(5, 10)
        for _ in range(40):
            x = rand_element(ctx, rng)
            y = rand_element(ctx, rng)
            assert twist1(x + y) == twist1(x) + twist1(y)

    def test_multiplicative_without_overflow(self):
        # products of low-degree polynomials stay below the truncation, and
        # there the twist is bit-exactly multiplicative
        rng = random.Random(24)
        ctx = IwasawaContext(5, 16)
        for _ in range(40):
            x = rand_element(IwasawaContext(5, 8), rng)
            y = rand_element(IwasawaContext(5, 8), rng)
            xe = IwasawaElement(ctx, [list(c) for c in x.components])
            ye = IwasawaElement(ctx, [list(c) for c in y.components])
            assert twist1(xe * ye) == twist1(xe) * twist1(ye)

    def test_multiplicative_congruence_on_overflow(self):
        # truncated tails re-enter at degree k with valuation >= M_T - k:
        # the automorphism holds modulo the twist-stable mixed ideal
        rng = random.Random(25)
        ctx = IwasawaContext(3, 10)
        for _ in range(30):
            x = rand_element(ctx, rng)
            y = rand_element(ctx, rng)
            lhs = twist1(x * y)
            rhs = twist1(x) * twist1(y)
            diff = lhs - rhs
            for comp in diff.components:
                for k, c in enumerate(comp):
                    if c:
                        assert vp_fraction(c, 3) >= ctx.M_T - k

    def test_component_shift_direction(self):
        # content of component i+1 lands in component i (the per-idempotent
        # form of the twist consistency)
        ctx = IwasawaContext(5, 6)
        x = IwasawaElement.from_component(ctx, 2, [7])
        tw = twist1(x)
        assert tw.components[1][0] == 7
        assert all(all(c == 0 for c in tw.components[i]) for i in (0, 2, 3))

    def test_eval_after_twist_is_character_evaluation(self):
        # eval(twist(x)) picks component 1 of x evaluated at T = p
        rng = random.Random(23)
        ctx = IwasawaContext(3, 10)
        for _ in range(20):
            x = rand_element(ctx, rng)
            got = eval_at_zero(twist1(x))
            direct = evaluate_component(x, 1, Fraction(ctx.p))
            assert got == direct


class TestEll:
    def test_ell0_constant_term(self):
        ctx = IwasawaContext(3, 8)
        assert eval_at_zero(ell(ctx, 0)) == 0

    def test_ell_j_offset(self):
        ctx = IwasawaContext(3, 8)
        l0 = ell(ctx, 0)
        l5 = ell(ctx, 5)
        diff = l0 - l5
        assert diff == IwasawaElement.one(ctx) * 5

    def test_p3_coefficients(self):
        # (T - T^2/2 + T^3/3)/log_3(4), and the normalizer has valuation 1
        ctx = IwasawaContext(3, 4)
        lp = log_one_plus_p(ctx)
        assert vp_fraction(lp, 3) == 1
        l0 = ell(ctx, 0)
        comp = l0.components[0]
        assert comp[0] == 0
        assert comp[1] == 1 / lp
        assert comp[2] == Fraction(-1, 2) / lp
        assert comp[3] == Fraction(1, 3) / lp

    def test_denominators_tracked(self):
        ctx = IwasawaContext(3, 6)
        l0 = ell(ctx, 0)
        assert not l0.is_integral()
        assert l0.max_denominator_vp() >= 1

    def test_character_values(self):
        # at T = (1+p)^k - 1 the value is k - j up to the working precision
        ctx = IwasawaContext(3, 40, N=12)
        for j in (-2, 0, 1, 3):
            lj = ell(ctx, j)
            for k in (0, 1, 2, 3):
                t0 = Fraction((1 + ctx.p) ** k - 1)
                got = evaluate_component(lj, 0, t0)
                err = got - (k - j)
                assert err == 0 or vp_fraction(err, ctx.p) >= ctx.N - 1, (j, k)


class TestEval:
    def test_constant(self):
        ctx = IwasawaContext(3, 8)
        assert eval_at_zero(IwasawaElement.one(ctx)) == 1

    def test_wrong_component(self):
        ctx = IwasawaContext(3, 8)
        x = idempotent(ctx, 1) * rand_element(ctx, random.Random(1))
        assert eval_at_zero(x) == 0

    def test_ring_homomorphism(self):
        rng = random.Random(31)
        ctx = IwasawaContext(5, 10)
        for _ in range(60):
            x = rand_element(ctx, rng)
            y = rand_element(ctx, rng)
            assert eval_at_zero(x * y) == eval_at_zero(x) * eval_at_zero(y)
            assert eval_at_zero(x + y) == eval_at_zero(x) + eval_at_zero(y)


class TestLambdaUnit:
    def test_one_plus_pT(self):
        ctx = IwasawaContext(3, 6)
        x = IwasawaElement(ctx, [[1, 3], [1, 3]])
        assert is_lambda_unit(x)

    def test_p_plus_T(self):
        ctx = IwasawaContext(3, 6)
        x = IwasawaElement(ctx, [[3, 1], [3, 1]])
        assert not is_lambda_unit(x)

    def test_twist_preserves_units(self):
        rng = random.Random(41)
        ctx = IwasawaContext(5, 8)
        for _ in range(40):
            u = rand_element(ctx, rng, unit=True)
            assert is_lambda_unit(u)
            assert is_lambda_unit(twist1(u))

    def test_not_integral_raises(self):
        ctx = IwasawaContext(3, 6)
        x = IwasawaElement(ctx, [[Fraction(1, 3)], [1]])
        with pytest.raises(NotIntegral):
            is_lambda_unit(x)

    def test_multiplicative(self):
        rng = random.Random(42)
        ctx = IwasawaContext(3, 8)
        for _ in range(80):
            x = rand_element(ctx, rng)
            y = rand_element(ctx, rng)
            lhs = is_lambda_unit(x * y)
            assert lhs == (is_lambda_unit(x) and is_lambda_unit(y))


class TestDeltaConsistency:
    def test_constructed_pair(self):
        rng = random.Random(51)
        ctx = IwasawaContext(5, 12)
        for _ in range(20):
            d = rand_element(ctx, rng, unit=True)
            assert delta_twist_consistency(d, twist1(d))

    def test_perturbed_fails(self):
        ctx = IwasawaContext(3, 8)
        rng = random.Random(52)
        d = rand_element(ctx, rng, unit=True)
        d1 = twist1(d)
        comps = [list(c) for c in d1.components]
        comps[0][3] += Fraction(3 ** 19)
        assert not delta_twist_consistency(d, IwasawaElement(ctx, comps))

    def test_unrelated_units_fail(self):
        rng = random.Random(53)
        ctx = IwasawaContext(3, 8)
        for _ in range(20):
            a = rand_element(ctx, rng, unit=True)
            b = rand_element(ctx, rng, unit=True)
            if twist1(a) == b:
                continue  # astronomically unlikely with this generator
            assert not delta_twist_consistency(a, b)
