import itertools
import math

import numpy as np
import pytest

from conftest import random_real_field
from fbmlab.errors import ConfigError, DomainError, PreconditionError, RangeError
from fbmlab.lp_analysis import (
    DyadicPartition, FNNorm, NormParams, band_limits, bernstein_check, block_norms, chi, critical_s,
    dyadic_block, fbm_norm, fbm_report, holder_young_check, linear_convolution, low_pass, lp_norm, morrey_norm,
    paraproduct_decompose, smoothstep, spectral_morrey, theorem_violations,
)
from fbmlab.spectral_core import Grid, SpectralField, inverse_transform


def brute_morrey(g, p, mu, dxi=1.0):
    """Every lattice point as a center, every dyadic radius up to the diagonal, naive loops."""
    g = np.abs(np.asarray(g, dtype=complex))
    pts = list(itertools.product(*[range(s) for s in g.shape]))
    diag = math.sqrt(sum(s * s for s in g.shape))
    radii = [2.0 ** m for m in range(0, math.ceil(math.log2(diag + 1)) + 1)]
    best = 0.0
    for c in pts:
        for R in radii:
            total = 0.0
            for q in pts:
                if sum((a - b) ** 2 for a, b in zip(q, c)) < R * R:
                    total += g[q] ** p
            best = max(best, (R * dxi) ** (-mu / p) * (total * dxi ** g.ndim) ** (1 / p))
    return best


# --------------------------------------------------------------------------- partition


def test_chi_profile():
    assert chi(np.array([0.0, 0.75]))[1] == 1.0
    assert chi(np.array(4 / 3)) == 0.0
    r = np.linspace(0.75, 4 / 3, 50)
    assert np.all(np.diff(chi(r)) <= 0)
    assert smoothstep(np.array(0.5)) == pytest.approx(0.5)


def test_band_limits():
    assert band_limits(Grid(1, 256)) == (-1, 6)
    assert band_limits(Grid(2, 64, 8 * math.pi)) == (-3, 2)


@pytest.mark.parametrize("n,N", [(1, 256), (2, 128), (3, 32)])
def test_partition_of_unity_on_resolved_band(n, N):
    part = DyadicPartition(Grid(n, N))
    total = part.partition_sum()
    assert np.max(np.abs(total[part.resolved_mask] - 1)) <= 1e-12


def test_block_supports_and_disjointness():
    g = Grid(2, 64)
    part = DyadicPartition(g)
    r = g.abs_xi
    for k in part.ks:
        phi = part.phi(k)
        sup = phi != 0
        assert np.all(r[sup] >= 0.75 * 2.0 ** k) and np.all(r[sup] <= 8 / 3 * 2.0 ** k)
        for k2 in part.ks:
            if abs(k - k2) >= 2:
                assert not np.any(phi * part.phi(k2))


def test_block_out_of_band_raises():
    part = DyadicPartition(Grid(1, 64))
    with pytest.raises(RangeError):
        part.phi(part.k_max + 1)
    with pytest.raises(RangeError):
        DyadicPartition(Grid(1, 64), 3, 2)


def test_block_of_single_shell(rng):
    g = Grid(1, 256)
    part = DyadicPartition(g)
    k = 3
    c = np.zeros(g.shape, complex)
    c[8] = c[-8] = 0.5  # |xi| = 2^3
    f = SpectralField(g, c)
    np.testing.assert_array_equal(dyadic_block(f, part, k).coeffs, part.phi(k) * c)
    assert not np.any(dyadic_block(f, part, k + 2).coeffs)
    assert not np.any(dyadic_block(f, part, k - 2).coeffs)
    assert not np.any(dyadic_block(SpectralField(g, np.zeros(g.shape)), part, k).coeffs)


def test_blocks_sum_to_field_on_resolved_band(rng):
    g = Grid(2, 64)
    part = DyadicPartition(g)
    f = random_real_field(g, rng)
    f = f.with_coeffs(f.coeffs * part.resolved_mask)
    total = sum(dyadic_block(f, part, k).coeffs for k in part.ks)
    assert np.max(np.abs(total - f.coeffs)) <= 1e-12


def test_low_pass_plus_high_blocks_is_identity(rng):
    g = Grid(1, 256)
    part = DyadicPartition(g)
    f = random_real_field(g, rng)
    f = f.with_coeffs(f.coeffs * part.resolved_mask)
    for j in range(part.k_min, part.k_max + 1):
        total = low_pass(f, part, j).coeffs + sum(dyadic_block(f, part, k).coeffs for k in range(j, part.k_max + 1))
        assert np.max(np.abs(total - f.coeffs)) <= 1e-12
    assert not np.any(low_pass(f, part, part.k_min).coeffs)
    with pytest.raises(RangeError):
        low_pass(f, part, part.k_max + 2)


# --------------------------------------------------------------------------- Morrey norms


@pytest.mark.parametrize("p", [1.0, 2.0, 3.5])
def test_morrey_mu_zero_is_lp(rng, p):
    g = rng.standard_normal((12, 10)) + 1j * rng.standard_normal((12, 10))
    assert morrey_norm(g, p, 0.0, dxi=0.5, stride=1) == pytest.approx(lp_norm(g, p, 0.5), rel=1e-13)
    assert morrey_norm(g, p, 0.0, dxi=0.5, stride=4) == pytest.approx(lp_norm(g, p, 0.5), rel=1e-13)


def test_morrey_ball_indicator_matches_brute_force():
    g = np.zeros((9, 9))
    yy, xx = np.mgrid[:9, :9]
    g[(yy - 4) ** 2 + (xx - 3) ** 2 < 9] = 1.0
    assert morrey_norm(g, 1.0, 1.0, stride=1) == pytest.approx(brute_morrey(g, 1.0, 1.0), rel=1e-13)


@pytest.mark.parametrize("shape,p,mu", [((16,), 2.0, 0.5), ((7, 6), 3.0, 1.2), ((5, 4, 3), 1.5, 2.0)])
def test_morrey_random_matches_brute_force(rng, shape, p, mu):
    g = rng.standard_normal(shape) * (rng.random(shape) < 0.5)
    assert morrey_norm(g, p, mu, dxi=0.25, stride=1) == pytest.approx(brute_morrey(g, p, mu, 0.25), rel=1e-12)


def test_morrey_constant_closed_form():
    c, p, mu = 2.0, 2.0, 0.5
    g = np.full(16, c)
    # best ball is the largest one that still adds points; every ball is an interval
    best = max(R ** (-mu / p) * (c ** p * min(16, 2 * math.ceil(R) - 1)) ** (1 / p)
               for R in 2.0 ** np.arange(6))
    assert morrey_norm(g, p, mu, stride=1) == pytest.approx(best, rel=1e-13)


def test_morrey_refinement_never_decreases(rng):
    g = rng.standard_normal((24, 24))
    coarse = morrey_norm(g, 2.0, 1.0, stride=4)
    mid = morrey_norm(g, 2.0, 1.0, stride=2)
    fine = morrey_norm(g, 2.0, 1.0, stride=1)
    more_radii = morrey_norm(g, 2.0, 1.0, stride=1, radii_per_octave=2)
    assert coarse <= mid <= fine <= more_radii


def test_morrey_inf_and_errors(rng):
    g = rng.standard_normal(10)
    assert morrey_norm(g, math.inf, 0.5) == np.max(np.abs(g))
    with pytest.raises(DomainError):
        morrey_norm(g, 0.5, 0.0)
    with pytest.raises(DomainError):
        morrey_norm(g, 2.0, 1.0)
    with pytest.raises(DomainError):
        morrey_norm(np.array([np.nan]), 2.0, 0.0)
    assert morrey_norm(np.zeros(5), 2.0, 0.0) == 0.0


def test_morrey_argmax_reports_center():
    g = np.zeros(32)
    g[20] = 5.0
    val, where = morrey_norm(g, 2.0, 0.5, stride=1, return_argmax=True)
    assert where["radius"] == 1.0 and where["center"] == (20,)
    assert val == pytest.approx(5.0)


# --------------------------------------------------------------------------- FN norms


def test_norm_params_validation():
    with pytest.raises(DomainError):
        NormParams(0.5, 0.0, math.inf, 0.0)
    with pytest.raises(DomainError):
        NormParams(2.0, -0.1, math.inf, 0.0)
    with pytest.raises(ConfigError) as err:
        NormParams.theorem(2, 0.8, 0.5, 1.0, 1.0)
    assert "< p fails" in str(err.value)
    np_ = NormParams.theorem(2, 0.8, 0.5, 4.0, 1.0)
    assert np_.s == pytest.approx(2 - 1 / 4 - 1.1)


def test_theorem_violations_name_inequalities():
    assert theorem_violations(2, 0.8, 0.5, 4.0, 1.0) == []
    bad = " ".join(theorem_violations(1, 0.4, 1.0, 2.0, 1.5))
    assert "gamma" in bad and "mu" in bad and "beta" in bad


def test_critical_s_value():
    assert critical_s(1, 0.9, 0.5, 4.0, 0.5) == pytest.approx(1 - 0.5 / 4 - 1.3)


def test_fbm_norm_zero_and_single_annulus():
    g = Grid(2, 64)
    part = DyadicPartition(g)
    np_ = NormParams(2.0, 1.0, math.inf, 0.7)
    assert fbm_norm(SpectralField(g, np.zeros(g.shape)), part, np_) == 0.0
    # a shell deep inside one annulus touches only blocks k0 and its neighbours by smoothness
    k0 = 3
    shell = (np.abs(g.abs_xi - 1.5 * 2 ** k0) < 1.0).astype(complex)
    f = SpectralField(g, shell * (part.phi(k0) == 1))
    rows = block_norms(f, part, np_)
    nonzero = [r["k"] for r in rows if r["block_norm"] > 0]
    assert nonzero == [k0]
    expect = 2.0 ** (k0 * 0.7) * spectral_morrey(part.phi(k0) * f.coeffs, g, 2.0, 1.0)
    assert fbm_norm(f, part, np_) == pytest.approx(expect, rel=1e-14)


def test_fbm_q_sum_dominates_sup(rng):
    g = Grid(1, 256)
    part = DyadicPartition(g)
    f = random_real_field(g, rng)
    sup = fbm_norm(f, part, NormParams(2.0, 0.5, math.inf, 0.2))
    l2 = fbm_norm(f, part, NormParams(2.0, 0.5, 2.0, 0.2))
    l1 = fbm_norm(f, part, NormParams(2.0, 0.5, 1.0, 0.2))
    assert sup <= l2 <= l1


def test_fbm_report_layout(rng):
    g = Grid(1, 64)
    part = DyadicPartition(g)
    rows, summary = fbm_report(random_real_field(g, rng), part, NormParams(2.0, 0.0, math.inf, 0.0))
    assert [r["k"] for r in rows] == list(part.ks)
    assert summary["norm"] == max(r["weighted"] for r in rows)
    assert summary["k_min"] == part.k_min and summary["stride"] == 4


def test_fn_norm_callable_and_mu_check(rng):
    g = Grid(1, 64)
    f = random_real_field(g, rng)
    with pytest.raises(DomainError):
        fbm_norm(f, DyadicPartition(g), NormParams(2.0, 1.0, math.inf, 0.0))
    norm = FNNorm(DyadicPartition(g), NormParams(2.0, 0.5, math.inf, 0.0))
    assert norm(2 * f) == pytest.approx(2 * norm(f), rel=1e-14)


# --------------------------------------------------------------------------- paraproducts


def test_paraproduct_identity(rng):
    from fbmlab.checks import band_limited_field

    g = Grid(2, 64)
    part = DyadicPartition(g)
    for _ in range(5):
        f, h = band_limited_field(g, rng, part), band_limited_field(g, rng, part)
        parts = paraproduct_decompose(f, h, part)
        lhs = sum(inverse_transform(x) for x in parts)
        rhs = inverse_transform(f) * inverse_transform(h)
        assert np.max(np.abs(lhs - rhs)) <= 1e-10 * np.max(np.abs(rhs))


def test_paraproduct_with_zero_factor(rng):
    g = Grid(1, 128)
    f = random_real_field(g, rng)
    for x in paraproduct_decompose(f, f * 0.0, DyadicPartition(g)):
        assert not np.any(x.coeffs)


def test_paraproduct_separated_annuli(rng):
    g = Grid(1, 1024)
    part = DyadicPartition(g)
    c = np.zeros(g.shape, complex)
    c[[3, -3]] = 0.5  # |xi| = 3: inside block 1 only
    d = np.zeros(g.shape, complex)
    d[[96, -96]] = 0.5  # |xi| = 96: inside block 6 only
    f, h = SpectralField(g, c), SpectralField(g, d)
    t_fh, t_hf, rem = paraproduct_decompose(f, h, part)
    assert np.max(np.abs(rem.coeffs)) < 1e-15 and np.max(np.abs(t_hf.coeffs)) < 1e-15
    np.testing.assert_allclose(inverse_transform(t_fh), inverse_transform(f) * inverse_transform(h), atol=1e-14)


# --------------------------------------------------------------------------- Bernstein, Hoelder, Young


def test_bernstein_degenerate_identity(rng):
    g = Grid(1, 256)
    from fbmlab.checks import annulus_field

    f = annulus_field(g, rng, 6, 20)
    r = bernstein_check(f, (0,), 2.0, 2.0, 0.5, 0.5, 3)
    assert r["ratio"] <= 1 + 1e-12


@pytest.mark.parametrize("j", [2, 4, 5])
def test_bernstein_single_mode_closed_form(j):
    g = Grid(1, 256)
    c = np.zeros(g.shape, complex)
    c[[2 ** j, -(2 ** j)]] = 0.5
    # |i xi| = 2^j on the support, so with p = q and mu1 = mu2 the ratio is exactly 1
    r = bernstein_check(SpectralField(g, c), (1,), 3.0, 3.0, 0.25, 0.25, j)
    assert r["ratio"] == pytest.approx(1.0, rel=1e-13)


def test_bernstein_preconditions(rng):
    g = Grid(1, 256)
    from fbmlab.checks import annulus_field

    f = annulus_field(g, rng, 6, 20)
    with pytest.raises(PreconditionError):
        bernstein_check(f, (1,), 2.0, 2.0, 0.5, 0.5, 1)
    with pytest.raises(ConfigError):
        bernstein_check(f, (1,), 2.0, 3.0, 0.5, 0.5, 4)
    with pytest.raises(ConfigError):
        bernstein_check(f, (1, 0), 2.0, 2.0, 0.5, 0.5, 4)


def test_holder_young_zero_inputs():
    z = np.zeros(8)
    prm = dict(p1=2, mu1=0, p2=2, mu2=0, p3=1, mu3=0, p=2, mu=0)
    res = holder_young_check(z, z, z[:3], prm)
    assert res["holder"]["lhs"] == 0 and res["young"]["lhs"] == 0


def test_holder_cauchy_schwarz_case(rng):
    f, h = rng.standard_normal(20), rng.standard_normal(20)
    res = holder_young_check(f, h, np.ones(3), dict(p1=2, mu1=0, p2=2, mu2=0, p3=1, mu3=0, p=2, mu=0))
    assert res["holder"]["lhs"] == pytest.approx(np.sum(np.abs(f * h)))
    assert res["holder"]["lhs"] <= math.sqrt(np.sum(f * f) * np.sum(h * h))
    assert res["holder"]["ok"] and res["young"]["ok"]


def test_holder_exponent_mismatch():
    z = np.ones(8)
    with pytest.raises(ConfigError):
        holder_young_check(z, z, z, dict(p1=2, mu1=0, p2=2, mu2=0, p3=2, mu3=0, p=2, mu=0))
    with pytest.raises(ConfigError):
        holder_young_check(z, z, z, dict(p1=2, mu1=0.5, p2=2, mu2=0, p3=1, mu3=0, p=2, mu=0))


def test_linear_convolution_matches_numpy(rng):
    a, b = rng.standard_normal(5), rng.standard_normal(9)
    np.testing.assert_allclose(linear_convolution(a, b, 0.5).real, 0.5 * np.convolve(a, b), atol=1e-13)
