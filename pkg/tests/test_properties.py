"""Randomised invariants (hypothesis) plus a large deterministic fuzz of the admissibility check."""
import math

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from fbmlab.checks import random_exponents
from fbmlab.experiments import rescale_field
from fbmlab.lp_analysis import (
    DyadicPartition, NormParams, fbm_norm, holder_young_check, morrey_norm, theorem_violations,
)
from fbmlab.solver import nonlinearity
from fbmlab.spectral_core import Grid, Semigroup, SpectralField, forward_transform
from fbmlab.symbols import builtin_symbol

FAST = settings(max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow])

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)
arrays_1d = arrays(np.float64, st.integers(1, 24), elements=finite)
arrays_2d = arrays(np.float64, st.tuples(st.integers(1, 8), st.integers(1, 8)), elements=finite)
exponent_p = st.floats(1.0, 8.0)
scalars = st.one_of(st.just(0.0), st.floats(1e-6, 50.0), st.floats(-50.0, -1e-6))
dxi = st.sampled_from([0.25, 0.5, 1.0, 2.0])


def admissible(n, gamma, beta, p, mu):
    d = n + beta + 1 - 4 * gamma
    return (gamma > 0.5 and 0 <= beta < 2 * gamma and 2 * gamma < (n + beta + 1) / 2 and 0 <= mu < n
            and d > 0 and (n - mu) / d < p)


def test_admissibility_fuzz_against_direct_evaluation():
    rng = np.random.default_rng(2024)
    disagree = 0
    for _ in range(10_000):
        n = int(rng.integers(1, 4))
        gamma, beta = rng.uniform(0.3, 1.6), rng.uniform(-0.2, 2.5)
        p, mu = rng.uniform(0.5, 12.0), rng.uniform(-0.2, n + 0.2)
        disagree += admissible(n, gamma, beta, p, mu) != (theorem_violations(n, gamma, beta, p, mu) == [])
    assert disagree == 0


@FAST
@given(st.integers(1, 3), st.floats(0.3, 1.6), st.floats(-0.2, 2.5), st.floats(0.5, 12.0), st.floats(-0.2, 3.2))
def test_admissibility_matches_direct_evaluation(n, gamma, beta, p, mu):
    assert admissible(n, gamma, beta, p, mu) == (theorem_violations(n, gamma, beta, p, mu) == [])


@FAST
@given(st.one_of(arrays_1d, arrays_2d), exponent_p, st.floats(0.0, 0.99), scalars, dxi)
def test_morrey_is_absolutely_homogeneous(g, p, frac, c, h):
    mu = frac * g.ndim
    a = morrey_norm(c * g, p, mu, dxi=h, stride=1)
    b = abs(c) * morrey_norm(g, p, mu, dxi=h, stride=1)
    assert a == pytest.approx(b, rel=1e-12, abs=1e-300)


@FAST
@given(st.one_of(arrays_1d, arrays_2d), exponent_p, st.floats(0.0, 0.99), st.integers(0, 2**32 - 1), dxi)
def test_morrey_triangle_and_monotonicity(g, p, frac, seed, h):
    mu = frac * g.ndim
    other = np.random.default_rng(seed).standard_normal(g.shape) * 100
    m = lambda x: morrey_norm(x, p, mu, dxi=h, stride=1)  # noqa: E731
    assert m(g + other) <= (m(g) + m(other)) * (1 + 1e-12)
    assert m(np.abs(g)) <= m(np.abs(g) + np.abs(other)) * (1 + 1e-12)


@FAST
@given(st.one_of(arrays_1d, arrays_2d), exponent_p, st.floats(0.0, 0.99), dxi)
def test_morrey_dominates_single_point_ball(g, p, frac, h):
    mu = frac * g.ndim
    # the radius-one ball around the largest entry holds that entry alone
    lower = h ** (-mu / p) * (np.max(np.abs(g)) ** p * h ** g.ndim) ** (1 / p)
    assert morrey_norm(g, p, mu, dxi=h, stride=1) >= lower * (1 - 1e-12)


@FAST
@given(st.integers(0, 2**32 - 1), exponent_p, st.floats(0.0, 0.99), st.floats(-1.0, 1.0))
def test_fn_norm_triangle_inequality(seed, p, mu, s):
    g = Grid(1, 128)
    part = DyadicPartition(g)
    rng = np.random.default_rng(seed)
    f, h = (forward_transform(rng.standard_normal(g.shape), g) for _ in range(2))
    prm = NormParams(p, mu, math.inf, s)
    assert fbm_norm(f + h, part, prm) <= (fbm_norm(f, part, prm) + fbm_norm(h, part, prm)) * (1 + 1e-12)


@FAST
@given(st.integers(0, 2**32 - 1))
def test_holder_young_on_random_admissible_exponents(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 3))
    shape = (int(rng.integers(2, 16)),) * n if n == 1 else (int(rng.integers(2, 8)),) * 2
    f, g = rng.standard_normal(shape), rng.standard_normal(shape) * (rng.random(shape) < 0.5)
    phi = rng.standard_normal((3,) * n)
    res = holder_young_check(f, g, phi, random_exponents(rng, n), 2.0 ** int(rng.integers(-2, 3)))
    assert res["holder"]["ok"] and res["young"]["ok"]


@FAST
@given(st.integers(0, 2**32 - 1), st.integers(1, 3), st.floats(0.6, 1.4), st.floats(0.0, 1.5))
def test_rescale_down_then_up_recovers_even_lattice(seed, m, gamma, beta):
    g = Grid(1, 128)
    f = forward_transform(np.random.default_rng(seed).standard_normal(g.shape), g)
    lam = 2.0 ** m
    back = rescale_field(rescale_field(f, 1 / lam, gamma, beta), lam, gamma, beta)
    k = g.indices[0]
    keep = (k % int(lam) == 0) & ~g.nyquist_mask
    np.testing.assert_allclose(back.coeffs[keep], f.coeffs[keep], rtol=1e-12)


@FAST
@given(st.integers(0, 2**32 - 1), st.floats(0.55, 1.5), st.floats(0.0, 2.0), st.floats(0.0, 2.0))
def test_semigroup_property(seed, gamma, s, t):
    g = Grid(2, 16)
    f = forward_transform(np.random.default_rng(seed).standard_normal(g.shape), g)
    sg = Semigroup(g, gamma)
    np.testing.assert_allclose(sg.apply(sg.apply(f, s), t).coeffs, sg.apply(f, s + t).coeffs, rtol=1e-12, atol=1e-15)


@FAST
@given(st.integers(0, 2**32 - 1), st.sampled_from(["gsqg", "vorticity2d", "hilbert", "burgers"]))
def test_nonlinearity_keeps_real_fields_real(seed, name):
    n = 1 if name in ("hilbert", "burgers") else 2
    g = Grid(n, 32)
    P = builtin_symbol(name, {"beta": 0.7} if name == "gsqg" else None, grid=g)
    f = forward_transform(np.random.default_rng(seed).standard_normal(g.shape), g)
    out = nonlinearity(f, P)
    assert out.hermitian_defect() <= 1e-12 * max(1.0, float(np.max(np.abs(out.coeffs))))
    assert abs(out.zero_mode) <= 1e-12


@FAST
@given(st.integers(0, 2**32 - 1))
def test_partition_blocks_reassemble(seed):
    g = Grid(2, 32)
    part = DyadicPartition(g)
    f = forward_transform(np.random.default_rng(seed).standard_normal(g.shape), g)
    f = SpectralField(g, f.coeffs * part.resolved_mask)
    total = sum(part.phi(k) * f.coeffs for k in part.ks)
    np.testing.assert_allclose(total, f.coeffs, atol=1e-12)
