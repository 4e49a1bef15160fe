import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from midec.errors import CapabilityError, DomainError
from midec.gaussian_oracle import JointGaussianState
from midec.phi import (
    GENERATORS,
    SobolevConstant,
    get_generator,
    phi_divergence_gaussian,
    phi_divergence_quadrature_1d,
    phi_eval,
    phi_fisher_info_quadrature_1d,
    phi_mutual_info_gaussian,
    phi_value,
    sobolev_constant_slc,
    sobolev_convolution,
    sobolev_pushforward,
)
from midec.targets import GaussianDist, gaussian_potential
from oracles import grid_mi_1d, normal_pdf, riemann_divergence, riemann_fisher

SMOOTH = ["kl", "chi2", "hellinger2", "reverse-kl", "reverse-chi2"]

# hand-written generators for the oracles, independent of the package table
PHI = {
    "kl": lambda r: np.where(r > 0, r * np.log(np.where(r > 0, r, 1)), 0.0),
    "chi2": lambda r: (r - 1) ** 2,
    "hellinger2": lambda r: 0.5 * (np.sqrt(r) - 1) ** 2,
    "tv": lambda r: 0.5 * np.abs(r - 1),
    "reverse-kl": lambda r: -np.log(r),
    "reverse-chi2": lambda r: 1 / r - r,
}
PHI2 = {"kl": lambda r: 1 / r, "chi2": lambda r: 2 + 0 * r}


def g1(m, v):
    return GaussianDist([m], [[v]])


def dens(m, v):
    return lambda x: normal_pdf(x, m, v)


# -- generators -----------------------------------------------------------------


def test_phi_eval_examples():
    assert phi_eval("kl", 1.0) == pytest.approx((0.0, 1.0, 1.0))
    assert phi_eval("chi2", 2.0) == pytest.approx((1.0, 2.0, 2.0))
    # d/dx ½(√x-1)² = ½ - 1/(2√x);  d²/dx² = 1/(4 x^{3/2})
    assert phi_eval("hellinger2", 4.0) == pytest.approx((0.5, 0.25, 0.03125), abs=1e-15)


def test_phi_eval_derivatives_match_finite_differences():
    for name in SMOOTH:
        for x in (0.3, 1.0, 2.7):
            v, d1, d2 = phi_eval(name, x)
            h = 1e-5
            fd1 = (PHI[name](x + h) - PHI[name](x - h)) / (2 * h)
            fd2 = (PHI[name](x + h) - 2 * PHI[name](x) + PHI[name](x - h)) / h**2
            assert v == pytest.approx(float(PHI[name](x)), abs=1e-14)
            assert d1 == pytest.approx(float(fd1), rel=1e-6, abs=1e-8)
            assert d2 == pytest.approx(float(fd2), rel=1e-4)


@pytest.mark.parametrize("name", ["kl", "reverse-kl", "reverse-chi2", "hellinger2"])
def test_singular_at_zero(name):
    with pytest.raises(DomainError):
        phi_eval(name, 0.0)


def test_nonsingular_at_zero_and_negative():
    assert phi_eval("chi2", 0.0)[0] == 1.0
    with pytest.raises(DomainError):
        phi_eval("chi2", -1.0)


def test_tv_second_derivative_unsupported():
    with pytest.raises(CapabilityError):
        phi_eval("tv", 2.0)
    assert phi_eval("tv", 3.0, order=1) == (1.0, 0.5)


def test_generator_names_and_aliases():
    assert set(GENERATORS) == {"kl", "chi2", "hellinger2", "tv", "reverse-kl", "reverse-chi2"}
    assert get_generator("ChiSquared").name == "chi2"
    with pytest.raises(DomainError):
        get_generator("renyi")


@pytest.mark.parametrize("name", list(PHI))
def test_phi_one_is_zero(name):
    assert phi_eval(name, 1.0, order=1)[0] == 0.0


@settings(max_examples=200, deadline=None)
@given(name=st.sampled_from(SMOOTH), x=st.floats(1e-6, 1e6))
def test_property_strict_convexity(name, x):
    assert phi_eval(name, x)[2] > 0


@settings(max_examples=300, deadline=None)
@given(name=st.sampled_from(list(PHI)), a=st.floats(1e-6, 1e4), b=st.floats(1e-6, 1e4))
def test_property_midpoint_convexity(name, a, b):
    mid = float(phi_value(name, 0.5 * (a + b)))
    avg = 0.5 * (float(phi_value(name, a)) + float(phi_value(name, b)))
    assert mid <= avg + 1e-9 * (1 + abs(avg))


# -- divergences between Gaussians ------------------------------------------------


def test_kl_examples():
    assert phi_divergence_gaussian("kl", g1(0, 1), g1(0, 1)) == 0.0
    oracle = riemann_divergence(PHI["kl"], dens(1, 1), dens(0, 1))
    assert oracle == pytest.approx(0.5, abs=1e-9)
    assert phi_divergence_gaussian("kl", g1(1, 1), g1(0, 1)) == pytest.approx(oracle, abs=1e-9)


def test_chi2_examples():
    oracle = riemann_divergence(PHI["chi2"], dens(1, 1), dens(0, 1))
    assert oracle == pytest.approx(math.e - 1, abs=1e-8)
    assert phi_divergence_gaussian("chi2", g1(1, 1), g1(0, 1)) == pytest.approx(oracle, abs=1e-8)
    oracle = riemann_divergence(PHI["chi2"], dens(0, 1), dens(0, 4), lo=-40, hi=40, n=800_001)
    assert oracle == pytest.approx(4 / math.sqrt(7) - 1, abs=1e-9)
    assert phi_divergence_gaussian("chi2", g1(0, 1), g1(0, 4)) == pytest.approx(oracle, abs=1e-9)


def test_chi2_divergent_regime_is_inf_not_nan():
    assert phi_divergence_gaussian("chi2", g1(0, 2.0), g1(0, 1.0)) == math.inf
    assert phi_divergence_gaussian("chi2", g1(0, 3.0), g1(0, 1.0)) == math.inf
    assert phi_divergence_gaussian("reverse-chi2", g1(0, 1.0), g1(0, 2.5)) == math.inf
    d2 = GaussianDist([0, 0], np.diag([1.0, 2.5]))
    assert phi_divergence_gaussian("chi2", d2, GaussianDist([0, 0], np.eye(2))) == math.inf


@pytest.mark.parametrize("name", SMOOTH + ["tv"])
@pytest.mark.parametrize("pm,pv,qm,qv", [(0.3, 0.8, 0.0, 1.0), (-1.0, 1.5, 0.5, 1.2), (0.0, 0.6, 0.2, 0.5)])
def test_closed_forms_match_grid_oracle(name, pm, pv, qm, qv):
    got = phi_divergence_gaussian(name, g1(pm, pv), g1(qm, qv))
    oracle = riemann_divergence(PHI[name], dens(pm, pv), dens(qm, qv))
    assert got == pytest.approx(oracle, rel=1e-6, abs=1e-9)


def test_multivariate_kl_and_chi2_factorise_over_diagonal():
    mu = GaussianDist([0.3, -0.2], np.diag([0.8, 1.3]))
    nu = GaussianDist([0.0, 0.1], np.diag([1.0, 1.1]))
    kl = sum(phi_divergence_gaussian("kl", g1(a, b), g1(c, e)) for a, b, c, e in [(0.3, 0.8, 0.0, 1.0), (-0.2, 1.3, 0.1, 1.1)])
    assert phi_divergence_gaussian("kl", mu, nu) == pytest.approx(kl, rel=1e-12)
    c1 = phi_divergence_gaussian("chi2", g1(0.3, 0.8), g1(0.0, 1.0))
    c2 = phi_divergence_gaussian("chi2", g1(-0.2, 1.3), g1(0.1, 1.1))
    assert phi_divergence_gaussian("chi2", mu, nu) == pytest.approx((1 + c1) * (1 + c2) - 1, rel=1e-12)
    h1 = phi_divergence_gaussian("hellinger2", g1(0.3, 0.8), g1(0.0, 1.0))
    h2 = phi_divergence_gaussian("hellinger2", g1(-0.2, 1.3), g1(0.1, 1.1))
    assert phi_divergence_gaussian("hellinger2", mu, nu) == pytest.approx(1 - (1 - h1) * (1 - h2), rel=1e-12)


def test_tv_only_in_one_dimension():
    with pytest.raises(CapabilityError):
        phi_divergence_gaussian("tv", GaussianDist.isotropic(0, 1, 2), GaussianDist.isotropic(1, 1, 2))


@settings(max_examples=100, deadline=None)
@given(name=st.sampled_from(SMOOTH), seed=st.integers(0, 2**31), d=st.integers(1, 3))
def test_property_identity_zero(name, seed, d):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(d, d))
    mu = GaussianDist(rng.normal(size=d), a @ a.T + 0.3 * np.eye(d))
    assert abs(phi_divergence_gaussian(name, mu, mu)) <= 1e-10


@settings(max_examples=100, deadline=None)
@given(name=st.sampled_from(SMOOTH), seed=st.integers(0, 2**31), d=st.integers(1, 3))
def test_property_nonnegative(name, seed, d):
    rng = np.random.default_rng(seed)
    mats = [rng.normal(size=(d, d)) for _ in range(2)]
    mu = GaussianDist(rng.normal(size=d), mats[0] @ mats[0].T + 0.3 * np.eye(d))
    nu = GaussianDist(rng.normal(size=d), mats[1] @ mats[1].T + 0.3 * np.eye(d))
    assert phi_divergence_gaussian(name, mu, nu) >= -1e-10


# -- quadrature ---------------------------------------------------------------------


def test_quadrature_examples():
    assert phi_divergence_quadrature_1d("kl", dens(0, 1), dens(0, 1), (-10, 10)) == pytest.approx(0, abs=1e-9)
    assert phi_divergence_quadrature_1d("kl", dens(1, 1), dens(0, 1), (-10, 11)) == pytest.approx(0.5, abs=1e-8)
    got = phi_divergence_quadrature_1d("chi2", dens(0, 1), dens(0, 4), (-20, 20))
    assert got == pytest.approx(4 / math.sqrt(7) - 1, abs=1e-8)


def test_quadrature_normalisation_check():
    with pytest.raises(DomainError):
        phi_divergence_quadrature_1d("kl", lambda x: 2 * normal_pdf(x), dens(0, 1), (-10, 10))
    with pytest.raises(DomainError):
        phi_divergence_quadrature_1d("kl", dens(0, 1), dens(0, 1), (-1, 1))


# -- Fisher information and Sobolev inequality ------------------------------------------


def test_fisher_zero_when_equal():
    assert phi_fisher_info_quadrature_1d("kl", dens(0, 1), dens(0, 1), (-10, 10)) == pytest.approx(0, abs=1e-12)


def test_fisher_kl_relative_fisher_information():
    # relative Fisher information of N(m,1) w.r.t. N(0,1) is m^2
    got = phi_fisher_info_quadrature_1d("kl", dens(0.1, 1), dens(0, 1), (-10.1, 10.1))
    assert got == pytest.approx(0.01, abs=1e-6)


def test_fisher_chi2_grid_oracle_and_poincare():
    got = phi_fisher_info_quadrature_1d("chi2", dens(0.1, 1), dens(0, 1), (-12, 12))
    oracle = riemann_fisher(PHI2["chi2"], dens(0.1, 1), dens(0, 1))
    assert got == pytest.approx(oracle, rel=1e-6)
    div = phi_divergence_gaussian("chi2", g1(0.1, 1), g1(0, 1))
    assert 2 * 1 * div <= got + 1e-12


def test_fisher_tv_rejected():
    with pytest.raises(CapabilityError):
        phi_fisher_info_quadrature_1d("tv", dens(0, 1), dens(0, 1), (-10, 10))


def test_fisher_reverse_chi2_lighter_tails_diverges():
    # p = N(0, 1/2) has lighter tails than q = N(0, 1): integrand ~ x^2 q^2/p is not integrable
    got = phi_fisher_info_quadrature_1d("reverse-chi2", dens(0, 0.5), dens(0, 1), (-40, 40))
    assert got == math.inf


@settings(max_examples=50, deadline=None)
@given(name=st.sampled_from(["kl", "chi2"]), m=st.floats(-1, 1), v=st.floats(0.7, 1.3))
def test_property_phi_sobolev_standard_normal(name, m, v):
    d = phi_divergence_gaussian(name, g1(m, v), g1(0, 1))
    fi = phi_fisher_info_quadrature_1d(name, dens(m, v), dens(0, 1), (-14, 14))
    assert 2 * d <= fi + 1e-6


# -- Sobolev algebra -------------------------------------------------------------------------


def test_sobolev_examples():
    assert sobolev_constant_slc(1.0) == 1.0
    assert sobolev_constant_slc(4.0) == 4.0
    assert sobolev_constant_slc(gaussian_potential(GaussianDist.isotropic(0, 1 / 3, 2)).alpha) == pytest.approx(3.0)
    assert sobolev_pushforward(1, 1) == 1
    assert sobolev_pushforward(2, 0.9) == pytest.approx(2.469136, abs=1e-6)
    assert sobolev_pushforward(1, 2) == 0.25
    assert sobolev_convolution(2, 2) == pytest.approx(1.0)
    assert sobolev_convolution(1, 1 / 0.2) == pytest.approx(1 / 1.2, abs=1e-12)
    assert sobolev_convolution(1.0, math.inf) == 1.0


def test_sobolev_domain_errors():
    with pytest.raises(DomainError):
        sobolev_constant_slc(0.0)
    with pytest.raises(DomainError):
        SobolevConstant(-1)
    with pytest.raises(DomainError):
        sobolev_pushforward(1.0, 0.0)


@settings(max_examples=200, deadline=None)
@given(a=st.floats(1e-3, 1e3), b=st.floats(1e-3, 1e3), c=st.floats(1e-3, 1e3))
def test_property_convolution_symmetric_associative(a, b, c):
    assert sobolev_convolution(a, b) == sobolev_convolution(b, a)
    left = sobolev_convolution(sobolev_convolution(a, b), c)
    right = sobolev_convolution(a, sobolev_convolution(b, c))
    assert abs(left - right) <= 1e-12 * max(left, 1.0)


# -- Phi mutual information -----------------------------------------------------------------


def joint1(v0, vk, c):
    return JointGaussianState([0.0], [0.0], [[v0]], [[vk]], [[c]])


@pytest.mark.parametrize("name", SMOOTH)
def test_mi_zero_cross(name):
    assert phi_mutual_info_gaussian(joint1(1, 1, 0), name) == 0.0


def test_mi_kl_scalar():
    assert phi_mutual_info_gaussian(joint1(1, 1, 0.5), "kl") == pytest.approx(-0.5 * math.log(0.75), abs=1e-14)


def test_mi_chi2_exceeds_kl_and_matches_oracles():
    j = joint1(1, 1, 0.5)
    chi2 = phi_mutual_info_gaussian(j, "chi2")
    assert chi2 > phi_mutual_info_gaussian(j, "kl")
    # closed form rho^2/(1-rho^2) for a bivariate normal, and a 2-d grid sum
    assert chi2 == pytest.approx(1 / 3, rel=1e-10)
    assert chi2 == pytest.approx(grid_mi_1d(1, 1, 0.5, PHI["chi2"]), rel=1e-6)


@pytest.mark.parametrize("name", SMOOTH)
@pytest.mark.parametrize("v0,vk,c", [(1.0, 1.0, 0.3), (2.0, 0.5, -0.4), (0.7, 1.3, 0.45)])
def test_mi_all_generators_match_grid_oracle(name, v0, vk, c):
    got = phi_mutual_info_gaussian(joint1(v0, vk, c), name)
    oracle = grid_mi_1d(v0, vk, c, PHI[name])
    assert got == pytest.approx(oracle, rel=1e-6)


def test_mi_reverse_chi2_diverges_at_half_correlation():
    # the integral of p(x)^2 p(y)^2 / p(x,y) is finite only for |rho| < 1/2
    assert phi_mutual_info_gaussian(joint1(1, 1, 0.5), "reverse-chi2") == math.inf
    r = 0.3
    s = 1 - r * r
    exact = s**1.5 / math.sqrt((1 - 2 * r * r) ** 2 - r * r) - 1
    assert phi_mutual_info_gaussian(joint1(1, 1, r), "reverse-chi2") == pytest.approx(exact, rel=1e-10)


def test_mi_capabilities():
    j2 = JointGaussianState(np.zeros(2), np.zeros(2), np.eye(2), np.eye(2), 0.5 * np.eye(2))
    assert phi_mutual_info_gaussian(j2, "kl") == pytest.approx(-math.log(0.75), abs=1e-14)
    with pytest.raises(CapabilityError):
        phi_mutual_info_gaussian(j2, "chi2")
    with pytest.raises(CapabilityError):
        phi_mutual_info_gaussian(joint1(1, 1, 0.5), "tv")


def test_mi_perfect_dependence_infinite():
    assert phi_mutual_info_gaussian(joint1(1, 1, 1.0), "kl") == math.inf


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 2**31), d=st.integers(1, 3))
def test_property_kl_mi_invariant_under_block_reparametrisation(seed, d):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(2 * d, 2 * d))
    cov = a @ a.T + 0.5 * np.eye(2 * d)
    j = JointGaussianState(np.zeros(d), np.zeros(d), cov[:d, :d], cov[d:, d:], cov[:d, d:])
    A = rng.normal(size=(d, d)) + 3 * np.eye(d)
    Bm = rng.normal(size=(d, d)) + 3 * np.eye(d)
    jt = JointGaussianState(np.zeros(d), np.zeros(d), A @ j.cov0 @ A.T, Bm @ j.covk @ Bm.T, A @ j.cross @ Bm.T)
    v1, v2 = phi_mutual_info_gaussian(j, "kl"), phi_mutual_info_gaussian(jt, "kl")
    assert abs(v1 - v2) <= 1e-9 * max(1.0, v1)
    # and it equals the determinant formula
    det = 0.5 * (np.linalg.slogdet(j.cov0)[1] + np.linalg.slogdet(j.covk)[1] - np.linalg.slogdet(cov)[1])
    assert abs(v1 - det) <= 1e-9 * max(1.0, v1)
