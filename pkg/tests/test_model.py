import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from evohj.exceptions import InvalidParameters
from evohj.model import (
    ModelParams,
    PopulationSizes,
    effective_fitness,
    fitness_derivatives,
    fitness_eigenvector,
    fitness_gradient,
    fitness_matrix,
    growth_rate,
)

GENERIC = ModelParams(r1=2, r2=1.5, g1=1, g2=2, theta=0.5, kappa1=1, kappa2=1, m1=0.5, m2=0.7)


def oracle_top_eigen(p, z, N):
    vals, vecs = np.linalg.eig(fitness_matrix(z, N, p))
    k = np.argmax(vals.real)
    v = np.abs(vecs[:, k].real)
    return vals[k].real, v / v.sum()


def test_growth_rate_examples():
    p = ModelParams(r1=2, r2=3, g1=1, g2=1, theta=0.5, kappa1=1, kappa2=2, m1=1, m2=1)
    assert growth_rate(1, -0.5, 0.0, p) == 2.0
    assert growth_rate(2, 0.5, 3 / 2, p) == 0.0
    assert growth_rate(1, 0.0, 1.0, p) == pytest.approx(0.75, abs=1e-15)


def test_growth_rate_rejects_bad_habitat():
    with pytest.raises(ValueError):
        growth_rate(3, 0.0, 1.0, GENERIC)


@pytest.mark.parametrize(
    "kwargs, fragment",
    [
        (dict(m1=0.0), "migration"),
        (dict(m2=-1.0), "migration"),
        (dict(r1=0.4, r2=0.6), "persistence"),
        (dict(g1=0.0), "g1"),
        (dict(kappa2=-1.0), "kappa2"),
        (dict(epsilon=0.0), "epsilon"),
        (dict(theta=float("nan")), "finite"),
    ],
)
def test_params_validation(kwargs, fragment):
    base = GENERIC.as_dict()
    base.update(kwargs)
    with pytest.raises(InvalidParameters, match=fragment):
        ModelParams(**base)


def test_identical_habitats_without_separation():
    p = ModelParams(r1=2, r2=2, g1=1.3, g2=1.3, theta=0.0, kappa1=1, kappa2=1, m1=0.4, m2=0.4)
    z = np.linspace(-2, 2, 9)
    np.testing.assert_allclose(effective_fitness(z, (0.7, 0.7), p), growth_rate(1, z, 0.7, p), atol=1e-14)


def test_antidiagonal_matrix_has_unit_eigenvalue():
    p = ModelParams(r1=2, r2=2, g1=1, g2=1, theta=0.0, kappa1=1, kappa2=1, m1=1, m2=1)
    assert effective_fitness(0.0, (1.0, 1.0), p) == pytest.approx(1.0, abs=1e-15)
    a1, a2 = fitness_eigenvector(0.0, (1.0, 1.0), p)
    assert (a1, a2) == pytest.approx((0.5, 0.5), abs=1e-15)


def test_generic_value_matches_eigensolver():
    N = PopulationSizes(1.0, 0.8)
    w, v = oracle_top_eigen(GENERIC, 0.3, N)
    assert effective_fitness(0.3, N, GENERIC) == pytest.approx(w, abs=1e-12)
    a1, a2 = fitness_eigenvector(0.3, N, GENERIC)
    assert a2 / a1 == pytest.approx(v[1] / v[0], rel=1e-10)


def test_symmetric_eigenvector_is_balanced():
    p = ModelParams(r1=3, r2=3, g1=1, g2=1, theta=0.5, kappa1=1, kappa2=1, m1=2, m2=2)
    assert fitness_eigenvector(0.0, (1.2, 1.2), p) == pytest.approx((0.5, 0.5), abs=1e-15)


params_st = st.builds(
    ModelParams,
    r1=st.floats(0.5, 5), r2=st.floats(0.5, 5),
    g1=st.floats(0.1, 3), g2=st.floats(0.1, 3),
    theta=st.floats(0, 2), kappa1=st.floats(0.1, 3), kappa2=st.floats(0.1, 3),
    m1=st.floats(0.01, 0.4), m2=st.floats(0.01, 3),
)


@settings(max_examples=200, deadline=None)
@given(params_st, st.floats(-4, 4), st.floats(0, 5), st.floats(0, 5))
def test_eigenvalue_is_root_of_characteristic_polynomial(p, z, N1, N2):
    M = fitness_matrix(z, (N1, N2), p)
    w = effective_fitness(z, (N1, N2), p)
    resid = (M[0, 0] - w) * (M[1, 1] - w) - M[0, 1] * M[1, 0]
    scale = np.linalg.norm(M) ** 2
    assert abs(resid) <= 1e-10 * scale
    assert w >= max(M[0, 0], M[1, 1])


@settings(max_examples=200, deadline=None)
@given(params_st, st.floats(-4, 4), st.floats(0, 5), st.floats(0, 5))
def test_fitness_decreases_in_each_population(p, z, N1, N2):
    d = 1e-6
    w = effective_fitness(z, (N1, N2), p)
    assert effective_fitness(z, (N1 + d, N2), p) < w
    assert effective_fitness(z, (N1, N2 + d), p) < w


@settings(max_examples=200, deadline=None)
@given(params_st, st.floats(-4, 4), st.floats(0, 5), st.floats(0, 5))
def test_perron_vector_positive_and_normalised(p, z, N1, N2):
    a1, a2 = fitness_eigenvector(z, (N1, N2), p)
    assert a1 > 0 and a2 > 0
    assert a1 + a2 == pytest.approx(1.0, abs=1e-14)
    M = fitness_matrix(z, (N1, N2), p)
    w = effective_fitness(z, (N1, N2), p)
    v = np.array([a1, a2])
    np.testing.assert_allclose(M @ v, w * v, atol=1e-10 * np.linalg.norm(M))


@settings(max_examples=100, deadline=None)
@given(params_st, st.floats(0, 5), st.floats(0, 5))
def test_fitness_negative_outside_bracket(p, N1, N2):
    H = p.bracket_halfwidth
    z = np.array([-H - 0.1, H + 0.1, -3 * H - 1, 3 * H + 1])
    assert np.all(effective_fitness(z, (N1, N2), p) < 0)


def test_jet_derivatives_match_high_precision_differentiation():
    N = (1.0, 0.8)
    p = GENERIC
    mpmath.mp.dps = 40

    def W(x):
        a = p.r1 - p.g1 * (x + p.theta) ** 2 - p.kappa1 * N[0] - p.m1
        d = p.r2 - p.g2 * (x - p.theta) ** 2 - p.kappa2 * N[1] - p.m2
        return (a + d) / 2 + mpmath.sqrt(((a - d) / 2) ** 2 + p.m1 * p.m2)

    ours = fitness_derivatives(0.3, N, p, order=4)
    for k in range(5):
        ref = float(mpmath.diff(W, mpmath.mpf("0.3"), k))
        assert ours[k] == pytest.approx(ref, rel=1e-10, abs=1e-12)
    assert ours[1] == pytest.approx(fitness_gradient(0.3, N, p), rel=1e-13)


def test_swapped_params_reflect_the_landscape():
    z = np.linspace(-2, 2, 11)
    q = GENERIC.swapped()
    np.testing.assert_allclose(effective_fitness(z, (1.0, 0.8), GENERIC),
                               effective_fitness(-z, (0.8, 1.0), q), atol=1e-14)
