import io
import math
import warnings
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mcadiff import DomainError, RealizabilityWarning, analytic, chain, dumps
from mcadiff.combinatorics import binomial

P_GRID = [F(1, 20), F(1, 10), F(1, 4), F(1, 3), F(1, 2), F(2, 3), F(9, 10)]

# Verified constants of the p = 1/2 marginal, written out from exact
# master-equation iteration (t = 1..6, x >= 0).
HALF_TABLE = {
    1: [F(1, 2), F(1, 4)],
    2: [F(1, 4), F(1, 4), F(1, 8)],
    3: [F(1, 4), F(3, 16), F(1, 8), F(1, 16)],
    4: [F(3, 16), F(3, 16), F(1, 8), F(1, 16), F(1, 32)],
    5: [F(3, 16), F(5, 32), F(1, 8), F(5, 64), F(1, 32), F(1, 64)],
    6: [F(5, 32), F(5, 32), F(15, 128), F(5, 64), F(3, 64), F(1, 64), F(1, 128)],
}


def oracle(t, p, exact=True):
    return chain.marginal(chain.evolve(F(1, 2) if exact else 0.5, p, t, exact=exact))


# --- closed-form distribution ------------------------------------------------


def test_closed_form_examples():
    assert analytic.closed_form_prob(1, 1, F(2, 5)) == F(1, 5)
    assert analytic.closed_form_prob(2, 0, F(1, 4)) == F(9, 16)
    assert analytic.closed_form_prob(3, 0, F(3, 10)) == F(406, 1000)
    assert analytic.closed_form_prob(5, -2, F(3, 10)) == analytic.closed_form_prob(5, 2, F(3, 10))
    assert analytic.closed_form_prob(1, 1, 0.4, exact=False) == pytest.approx(0.2, abs=1e-15)
    assert analytic.closed_form_prob(4, 9, F(1, 3)) == 0


def test_closed_form_dist_small():
    assert list(analytic.closed_form_dist(0, F(1, 3)).probs) == [1]
    d = analytic.closed_form_dist(3, F(1, 2))
    assert list(d.probs) == [F(1, 16), F(1, 8), F(3, 16), F(1, 4), F(3, 16), F(1, 8), F(1, 16)]


def test_half_branch_fixture_matches_oracle():
    for t, row in HALF_TABLE.items():
        assert list(oracle(t, F(1, 2)).on_range(0, t)) == row
        assert [analytic.half_probability(t, x) for x in range(t + 1)] == row


def test_half_branch_is_half_of_the_unnormalised_constants():
    # without the 1/2 normalisation the p = 1/2 form gives P_1(0) = 1 and P_3(1) = 3/8
    unnormalised = {(1, 0): F(1), (3, 1): F(3, 8), (2, 0): F(1, 2)}
    for (t, x), value in unnormalised.items():
        assert analytic.half_probability(t, x) * 2 == value
        assert oracle(t, F(1, 2)).prob(x) * 2 == value


def test_half_branch_binomial_forms():
    for n in range(1, 30):
        for j in range(n):
            assert analytic.half_probability(2 * n + 1, 2 * j) == F(binomial(2 * n, n + j), 2 ** (2 * n + 1))
            assert analytic.half_probability(2 * n, 2 * j + 1) == F(binomial(2 * n - 1, n + j), 2 ** (2 * n))


def test_oracle_equivalence_exact_small_grid():
    for p in P_GRID:
        for t in range(0, 25):
            assert list(analytic.closed_form_dist(t, p, exact=True).probs) == list(oracle(t, p).probs)


def test_jacobi_backend_matches_sum_backend():
    for p in [F(1, 10), F(1, 3), F(2, 3), F(9, 10), F(3, 7)]:
        for t in range(1, 21):
            for x in range(t + 1):
                assert analytic.closed_form_prob(t, x, p, True, "jacobi") == analytic.closed_form_prob(t, x, p, True)


def test_jacobi_backend_restrictions():
    with pytest.raises(DomainError):
        analytic.closed_form_prob(4, 1, F(1, 2), True, "jacobi")
    with pytest.raises(ValueError):
        analytic.closed_form_prob(4, 1, 0.3, False, "jacobi")
    with pytest.raises(ValueError):
        analytic.closed_form_prob(4, 1, 0.3, False, "nope")


def test_edges():
    for p in P_GRID:
        for t in range(1, 60):
            assert analytic.closed_form_prob(t, t, p) == p**t / 2
            assert analytic.closed_form_prob(t, -t, p) == p**t / 2


def test_continuity_at_one_half():
    # no jump between the general path and the p = 1/2 branch: the float
    # evaluation at |1 - 2p| = 1e-5 equals exact rationals at that same p,
    # and moves away from the p = 1/2 value only linearly in |p - 1/2|
    for p in (0.5 - 0.5e-5, 0.5 + 0.5e-5):
        for t in (1, 2, 7, 30, 101):
            for x in range(t + 1):
                value = analytic.closed_form_prob(t, x, p, exact=False)
                assert abs(value - float(analytic.closed_form_prob(t, x, F(p), exact=True))) <= 1e-12
                assert abs(value - analytic.half_probability(t, x, exact=False)) <= 2 * abs(p - 0.5)


def test_float_mode_tracks_oracle():
    for p in [0.05, 0.25, 1 / 3, 0.5, 2 / 3, 0.9]:
        for t in (5, 37, 100):
            ref = oracle(t, p, exact=False).probs
            got = analytic.closed_form_dist(t, p, exact=False).probs
            assert np.max(np.abs(ref - got)) < 1e-10


def test_float_refuses_large_t_above_half():
    with pytest.raises(DomainError):
        analytic.closed_form_prob(analytic.ALTERNATING_MAX_T + 1, 3, 0.7, exact=False)
    # p < 1/2 has no such limit
    d = analytic.closed_form_dist(2000, 0.3, exact=False)
    assert abs(d.total() - 1) < 1e-10


def test_rejects_bad_inputs():
    with pytest.raises(ValueError):
        analytic.closed_form_prob(3, 1, 1.2)
    with pytest.raises(ValueError):
        analytic.closed_form_prob(-1, 0, 0.3)


def test_default_mode_switches_at_64():
    assert analytic.closed_form_dist(64, F(1, 3)).exact
    assert not analytic.closed_form_dist(65, F(1, 3)).exact


@settings(max_examples=30, deadline=None)
@given(st.fractions(min_value=F(1, 50), max_value=F(49, 50), max_denominator=50), st.integers(0, 30))
def test_normalised_and_symmetric(p, t):
    d = analytic.closed_form_dist(t, p, exact=True)
    assert d.total() == 1
    assert list(d.probs) == list(d.probs[::-1])
    assert all(q >= 0 for q in d.probs)


# --- moments -----------------------------------------------------------------


def test_variance_examples():
    for p in P_GRID:
        assert analytic.variance(1, p) == p
        assert analytic.variance(0, p) == 0
    assert analytic.variance(2, F(1, 2)) == F(3, 2)
    assert isinstance(analytic.variance(5, 0.3), float)


def test_moments_from_closed_form_distribution():
    for p in P_GRID:
        for t in (1, 2, 9, 40):
            d = analytic.closed_form_dist(t, p, exact=True)
            assert d.mean() == 0
            assert d.variance() == analytic.variance(t, p)


def test_directional_moments():
    for p in P_GRID:
        r = analytic.directional_moments(1, p)
        assert r.mu1_plus == p / 2
        for t in (0, 3, 17):
            r = analytic.directional_moments(t, p)
            assert r.mu1_plus == -r.mu1_minus
            assert r.mu2_plus == r.mu2_minus
            assert r.mean == 0 and r.variance == analytic.variance(t, p)


def test_variance_nondecreasing_and_limit():
    for p in [0.05, 0.25, 1 / 3, 0.5, 2 / 3, 0.8, 0.9]:
        v = [analytic.variance(t, p) for t in range(300)]
        assert all(b >= a - 1e-12 for a, b in zip(v, v[1:]))
        dc = p / (2 * (1 - p))
        for t in (100, 250, 1000):
            gap = analytic.variance(t, p) / (2 * t) - dc
            # the transient is exactly -dc^2 (1 - (2p - 1)^t) / t
            assert gap == pytest.approx(-dc * dc * (1 - (2 * p - 1) ** t) / t, rel=1e-9)
            if p <= 0.8:
                assert abs(gap) <= 2 * dc / t


# --- generating function --------------------------------------------------------


def test_pgf_normalisation_and_t0():
    for p in (0.1, 0.3, 0.5, 0.8):
        for t in (0, 1, 7, 50):
            gp, gm = analytic.pgf_eval(1.0, t, p)
            assert gp + gm == pytest.approx(1.0, abs=1e-13)
    gp, gm = analytic.pgf_eval(2.0, 0, 0.3)
    assert (gp, gm) == pytest.approx((0.5, 0.5), abs=1e-15)


def test_pgf_matches_power_series():
    for p in (0.3, 0.1, 2 / 3):
        for s in chain.evolve_series(0.5, p, 30, exact=False):
            xs = np.arange(s.support_min, s.support_min + len(s.probs_plus), dtype=float)
            for z in (0.5, 1.5, 2.0):
                gp, gm = analytic.pgf_eval(z, s.time, p)
                assert gp == pytest.approx(float(np.sum(s.probs_plus * z**xs)), rel=1e-10, abs=1e-10)
                assert gm == pytest.approx(float(np.sum(s.probs_minus * z**xs)), rel=1e-10, abs=1e-10)


def test_pgf_kernel_invariants():
    for p in (0.1, 0.5, 0.9):
        k = analytic.PgfKernel.build(p, 1.0)
        assert k.lam1 == pytest.approx(1.0)
        assert k.lam2 == pytest.approx(2 * p - 1)
        assert k.m == pytest.approx(2 * (1 - p))
        for z in (0.2, 1.3, 4.0):
            k = analytic.PgfKernel.build(p, z)
            assert k.lam1 + k.lam2 == pytest.approx(k.q)
            assert k.lam1 * k.lam2 == pytest.approx(p * p - (1 - p) ** 2)


@pytest.mark.parametrize("z", [0.0, -1.5])
def test_pgf_domain(z):
    with pytest.raises(DomainError):
        analytic.pgf_eval(z, 3, 0.3)


# --- diffusion coefficients ---------------------------------------------------


def test_diffusion_coefficient_values():
    assert analytic.diffusion_coefficient(F(1, 2)) == F(1, 2)
    assert analytic.diffusion_coefficient(0.5) == 0.5
    assert analytic.diffusion_coefficient(F(1, 3)) == F(1, 4)
    assert analytic.diffusion_coefficient(1e-12) < 1e-11


@settings(max_examples=100)
@given(st.fractions(min_value=F(1, 1000), max_value=F(1, 2), max_denominator=1000))
def test_diffusion_coefficient_formula_and_roundtrip(p):
    d = analytic.diffusion_coefficient(p)
    assert d == p / (2 * (1 - p))
    assert analytic.calibrate_p(d) == p


def test_realizability_warnings():
    with pytest.warns(RealizabilityWarning):
        assert analytic.calibrate_p(1.0) == pytest.approx(2 / 3)
    with pytest.warns(RealizabilityWarning):
        analytic.diffusion_coefficient(0.7)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert analytic.calibrate_p(0.5) == 0.5
        assert analytic.calibrate_p(F(1, 4)) == F(1, 3)
    with pytest.raises(ValueError):
        analytic.calibrate_p(0)


def test_type2_coefficients():
    assert analytic.type2_diffusion_coefficient(0) == 0.5
    assert analytic.type2_diffusion_coefficient(1) == 0
    assert analytic.type2_diffusion_coefficient(F(1, 2)) == F(1, 4)
    assert analytic.type2_calibrate_ps(0.25) == 0.5
    with pytest.raises(ValueError):
        analytic.type2_calibrate_ps(0.6)
    with pytest.raises(ValueError):
        analytic.type2_diffusion_coefficient(1.5)


def test_type2_dispersion_relation():
    for t in range(30):
        assert analytic.type2_dispersion(t, 0) == analytic.variance(t, 0.5)
        assert analytic.type2_dispersion(t, 1) == 0
    assert analytic.type2_dispersion(2, 0.5) == 0.75


def _skip_oracle(t, ps):
    """Dispersion of the paused p = 1/2 chain by enumerating skip patterns.

    At each odd step s a skip (probability ps) suppresses steps s and s + 1;
    otherwise step s applies. ``front[s]`` is the law of the number of applied
    steps on reaching step s.
    """
    front = {0: {0: F(1)}}
    final = {}

    def add(s, k, w):
        target = final if s >= t else front.setdefault(s, {})
        target[k] = target.get(k, 0) + w

    for s in range(t):
        for k, w in front.pop(s, {}).items():
            if s % 2 == 1:
                add(s + 2, k, w * ps)
                add(s + 1, k + 1, w * (1 - ps))
            else:
                add(s + 1, k + 1, w)
    if t == 0:
        final = {0: F(1)}
    assert sum(final.values()) == 1
    return sum(w * analytic.variance(k, F(1, 2)) for k, w in final.items())


def test_type2_exact_dispersion_matches_enumeration():
    for ps in (F(0), F(1, 4), F(1, 2), F(9, 10), F(1)):
        for t in range(0, 41):
            assert analytic.type2_dispersion_exact(t, ps) == _skip_oracle(t, ps)


def test_type2_relation_offset_is_constant():
    # the large-t relation misses the exact value by ps / 2 for every t >= 1
    for ps in (F(1, 4), F(1, 2)):
        for t in range(1, 50):
            assert analytic.type2_dispersion_exact(t, ps) - analytic.type2_dispersion(t, ps) == ps / 2


def test_type1_approaches_asymptote_faster_than_type2():
    for d in (0.1, 0.25, 0.4):
        p = analytic.calibrate_p(d)
        ps = analytic.type2_calibrate_ps(d)
        gap1 = abs(analytic.variance(10, p) / (2 * 10 * d) - 1)
        gap2 = abs(analytic.type2_dispersion(10, ps) / (2 * 10 * d) - 1)
        assert gap1 < gap2


# --- normal comparison and helpers ------------------------------------------------


def test_normal_pdf():
    # sqrt((1 - p) / (2 pi t p)) at p = 1/2, t = 10 is 1 / sqrt(20 pi)
    assert analytic.normal_pdf(0, 10, 0.5) == pytest.approx(0.1262, abs=5e-5)
    assert analytic.normal_pdf(0, 10, 0.5) == pytest.approx(1 / math.sqrt(20 * math.pi), rel=1e-15)
    xs = np.arange(-200, 201, dtype=float)
    f = analytic.normal_pdf(xs, 50, 0.3)
    assert np.allclose(f, f[::-1])
    assert float(np.sum(f)) == pytest.approx(1.0, abs=1e-12)
    assert float(np.sum(xs**2 * f)) == pytest.approx(2 * 50 * analytic.diffusion_coefficient(0.3), rel=1e-10)
    with pytest.raises(ValueError):
        analytic.normal_pdf(0, 0, 0.3)


def test_tv_to_normal_trend():
    tv20 = analytic.tv_distance_to_normal(20, 1 / 3)
    tv200 = analytic.tv_distance_to_normal(200, 1 / 3)
    assert tv200 <= tv20
    assert analytic.tv_distance_to_normal(400, 1 / 3) <= 0.02


def test_nonmonotonic_flag():
    assert analytic.is_nonmonotonic(analytic.closed_form_dist(40, 0.75, exact=False))
    assert analytic.is_nonmonotonic(analytic.closed_form_dist(10, F(3, 4)))
    assert not analytic.is_nonmonotonic(analytic.closed_form_dist(40, 1 / 3, exact=False))
    f = analytic.normal_pdf(np.arange(0, 41), 40, 0.75)
    assert np.all(np.diff(f) < 0)


def test_regression_and_xi():
    assert analytic.regression_p(1) == pytest.approx(0.51)
    assert analytic.regression_p(0) == 0
    assert analytic.regression_p(0.5) == pytest.approx(0.3425)
    assert analytic.xi_to_p(1) == 0.5
    assert analytic.xi_to_p(0.5) == 0.25
    ds = [analytic.diffusion_coefficient(analytic.xi_to_p(xi)) for xi in np.linspace(0.05, 1, 20)]
    assert all(b > a for a, b in zip(ds, ds[1:]))
    with pytest.raises(ValueError):
        analytic.xi_to_p(1.5)


# --- dumps ---------------------------------------------------------------------


def test_distribution_dump_roundtrip_exact():
    dists = [analytic.closed_form_dist(t, F(1, 3), exact=True) for t in (0, 1, 4)]
    buf = io.StringIO()
    dumps.write_distributions(dists, buf)
    text = buf.getvalue()
    assert text.splitlines()[0] == "t,x,prob"
    assert "1,0,2/3" in text
    back = dumps.read_distributions(io.StringIO(text))
    assert [list(d.probs) for d in back] == [list(d.probs) for d in dists]
    assert all(d.exact for d in back)


def test_distribution_dump_float_digits():
    d = analytic.closed_form_dist(3, 1 / 3, exact=False)
    buf = io.StringIO()
    dumps.write_distributions([d], buf)
    back = dumps.read_distributions(io.StringIO(buf.getvalue()))[0]
    # 17 significant digits round-trip binary64 exactly
    assert np.array_equal(back.probs, d.probs)


def test_distribution_dump_rejects_garbage():
    with pytest.raises(ValueError):
        dumps.read_distributions(io.StringIO("a,b\n1,2\n"))


def test_moment_dump():
    buf = io.StringIO()
    dumps.write_moments([analytic.directional_moments(t, F(1, 2)) for t in (1, 2)], buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "t,mean,variance,mu1_plus,mu2_plus"
    assert lines[2] == "2,0/1,3/2,1/4,3/4"
