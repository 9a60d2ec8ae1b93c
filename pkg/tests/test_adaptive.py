import numpy as np
import pytest
from scipy.optimize import bisect

from evohj.adaptive import (
    DIMORPHIC,
    MONOMORPHIC,
    check_support,
    demographic_equilibrium,
    find_ess,
    verify_zero_level_set,
)
from evohj.exceptions import InvalidParameters, NoPositiveEquilibrium
from evohj.model import ModelParams, effective_fitness, fitness_eigenvector

from conftest import BENCHMARK, symmetric


def ratio_bisection_sizes(z, p):
    """Bisect on log(N2/N1); habitat 1 balance gives N1, habitat 2 balance the residual."""
    c1 = p.r1 - p.g1 * (z + p.theta) ** 2 - p.m1
    c2 = p.r2 - p.g2 * (z - p.theta) ** 2 - p.m2

    def mismatch(logphi):
        phi = np.exp(logphi)
        N1 = (c1 + p.m2 * phi) / p.kappa1
        return c2 - p.kappa2 * phi * N1 + p.m1 / phi

    logphi = bisect(mismatch, -30.0, 15.0, xtol=1e-15, rtol=1e-15, maxiter=500)
    phi = np.exp(logphi)
    N1 = (c1 + p.m2 * phi) / p.kappa1
    return N1, phi * N1


@pytest.mark.parametrize("m", [0.05, 2.0])
def test_symmetric_equilibrium_at_origin(m):
    eq = demographic_equilibrium([0.0], symmetric(m))
    assert eq.sizes.N1 == pytest.approx(2.75, abs=1e-10)
    assert eq.sizes.N2 == pytest.approx(2.75, abs=1e-10)


@pytest.mark.parametrize("z", np.linspace(-0.8, 0.8, 9))
def test_monomorphic_sizes_match_bisection_oracle(z):
    eq = demographic_equilibrium([z], BENCHMARK)
    ref = ratio_bisection_sizes(z, BENCHMARK)
    assert eq.sizes == pytest.approx(ref, abs=1e-8)
    assert abs(effective_fitness(z, eq.sizes, BENCHMARK)) <= 1e-10


def test_extinct_configuration_rejected_at_construction():
    with pytest.raises(InvalidParameters):
        ModelParams(r1=0.5, r2=0.5, g1=1, g2=1, theta=0.5, kappa1=1, kappa2=1, m1=1, m2=1)


def test_no_equilibrium_far_from_optima():
    with pytest.raises(NoPositiveEquilibrium):
        demographic_equilibrium([10.0], BENCHMARK)


def test_support_validation():
    with pytest.raises(ValueError):
        check_support([0.3, 0.1])
    with pytest.raises(ValueError):
        check_support([0.1, 0.2, 0.3])
    assert check_support(0.5) == (0.5,)


def test_strong_migration_is_monomorphic(sym_strong):
    ess = find_ess(sym_strong)
    assert ess.morphtype == MONOMORPHIC
    assert ess.support[0] == pytest.approx(0.0, abs=1e-12)
    assert ess.sizes == pytest.approx((2.75, 2.75), abs=1e-10)
    zs = np.linspace(-3, 3, 2001)
    assert effective_fitness(zs, ess.sizes, sym_strong).max() <= 1e-8


def test_weak_migration_is_dimorphic_and_symmetric(sym_weak):
    ess = find_ess(sym_weak)
    assert ess.morphtype == DIMORPHIC
    za, zb = ess.support
    assert za == pytest.approx(-zb, abs=1e-9)
    assert 0 < zb <= 0.5
    W = lambda z: effective_fitness(z, ess.sizes, sym_weak)  # noqa: E731
    assert abs(W(za)) <= 1e-10 and abs(W(zb)) <= 1e-10
    assert W(0.0) < 0
    assert np.all(ess.weights > 0)


def test_dimorphic_equilibrium_consistency(sym_weak):
    ess = find_ess(sym_weak)
    eq = ess.equilibrium
    assert eq.weights.sum(axis=1) == pytest.approx(tuple(eq.sizes), rel=1e-12)
    for j, z in enumerate(eq.support):
        a1, a2 = fitness_eigenvector(z, eq.sizes, sym_weak)
        assert eq.weights[1, j] / eq.weights[0, j] == pytest.approx(a2 / a1, rel=1e-10)


@pytest.mark.parametrize("p", [symmetric(2.0), symmetric(0.05), BENCHMARK])
def test_rerunning_equilibrium_is_idempotent(p):
    ess = find_ess(p)
    again = demographic_equilibrium(ess.support, p, guess=ess.sizes)
    assert again.sizes == pytest.approx(tuple(ess.sizes), abs=1e-8)


def test_zero_level_set_checks(sym_strong, sym_weak):
    mono = find_ess(sym_strong)
    assert verify_zero_level_set(mono, sym_strong) < 0
    assert abs(effective_fitness(mono.support[0], mono.sizes, sym_strong)) <= 1e-10
    dimo = find_ess(sym_weak)
    assert verify_zero_level_set(dimo, sym_weak) < 0
    between = np.linspace(dimo.support[0] + 0.01, dimo.support[1] - 0.01, 101)
    assert effective_fitness(between, dimo.sizes, sym_weak).max() < 0


def test_failed_monomorphic_candidate_has_positive_excess():
    eq = demographic_equilibrium([0.0], symmetric(0.05))
    assert verify_zero_level_set(eq, symmetric(0.05)) > 1e-3


def test_uniqueness_over_randomised_scans():
    ref = find_ess(BENCHMARK)
    for seed in range(10):
        other = find_ess(BENCHMARK, n_scan=151 + 10 * seed, random_state=seed)
        assert other.support == pytest.approx(ref.support, abs=1e-6)
        assert tuple(other.sizes) == pytest.approx(tuple(ref.sizes), abs=1e-6)


@pytest.mark.parametrize("p", [BENCHMARK, ModelParams(2, 1.5, 1, 2, 0.5, 1, 1, 1.5, 2.0)])
def test_habitat_swap_reflects_ess(p):
    a = find_ess(p)
    b = find_ess(p.swapped())
    assert b.morphtype == a.morphtype
    assert sorted(-z for z in b.support) == pytest.approx(list(a.support), abs=1e-8)
    assert (b.sizes.N2, b.sizes.N1) == pytest.approx(tuple(a.sizes), abs=1e-8)


def test_continuity_in_growth_rate():
    p = ModelParams(2, 1.5, 1, 2, 0.5, 1, 1, 1.5, 2.0)
    q = ModelParams(2 + 1e-6, 1.5, 1, 2, 0.5, 1, 1, 1.5, 2.0)
    a, b = find_ess(p), find_ess(q)
    assert np.max(np.abs(np.subtract(a.sizes, b.sizes))) < 1e-5


def test_benchmark_is_dimorphic():
    ess = find_ess(BENCHMARK)
    assert ess.morphtype == DIMORPHIC
    assert np.all(ess.weights > 0)
