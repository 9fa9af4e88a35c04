import numpy as np
import pytest
import sympy as sp
from hypothesis import given
from hypothesis import strategies as st

from haarpush.errors import ChartError, DomainError
from haarpush.groups import (aff1, borel3, by_name, check_chart, direct_product, embed, euclidean, haar_density,
                             heis3, inverse, modular, modular_parts, multiply, random_elements,
                             translation_jacobian)
from haarpush.integrate import Integrator
from haarpush.measure import Density, bump, bump_density, constant, pair, right_translate

CATALOG = [euclidean(3), aff1(), heis3(), borel3(), direct_product(aff1(), heis3())]
pos = st.floats(0.2, 5.0)
real = st.floats(-3.0, 3.0)


@pytest.mark.parametrize("G", CATALOG, ids=lambda G: G.name)
def test_chart_invariants(G, rng):
    dev = check_chart(G, rng, n=500)
    assert dev["associativity"] <= 1e-9


def test_aff1_multiply_matches_matrix_product():
    G = aff1()
    x, y = np.array([2.0, 1.0]), np.array([3.0, 4.0])
    assert np.allclose(multiply(G, x, y), [6.0, 9.0])
    M = embed(G, x) @ embed(G, y)
    assert np.allclose(M, embed(G, multiply(G, x, y)))


def test_heis3_law_matches_unitriangular_product(rng):
    G = heis3()
    x, y = random_elements(G, rng, 50), random_elements(G, rng, 50)
    expected = np.stack([x[:, 0] + y[:, 0], x[:, 1] + y[:, 1], x[:, 2] + y[:, 2] + x[:, 0] * y[:, 1]], -1)
    assert np.allclose(multiply(G, x, y), expected, atol=1e-12)
    assert np.allclose(embed(G, x) @ embed(G, y), embed(G, multiply(G, x, y)))


@pytest.mark.parametrize("G", CATALOG, ids=lambda G: G.name)
def test_identity_is_neutral(G, rng):
    x = random_elements(G, rng, 20)
    e = np.broadcast_to(G.identity_array(), x.shape)
    assert np.allclose(multiply(G, e, x), x)


def test_domain_violation():
    with pytest.raises(DomainError, match="element outside chart domain"):
        multiply(aff1(), np.array([-1.0, 0.0]), np.array([1.0, 0.0]))


def test_rn_jacobian_is_identity():
    J = translation_jacobian(euclidean(3), np.array([1.0, -2.0, 0.5]), "left")
    assert np.allclose(J, np.eye(3))


def test_aff1_left_jacobian_symbolic_oracle():
    a, b, x, y = sp.symbols("a b x y", positive=True)
    law = sp.Matrix([a * x, a * y + b])
    J_sym = law.jacobian([x, y])
    det_sym = sp.simplify(J_sym.det())
    assert det_sym == a ** 2
    g = np.array([1.7, -0.4])
    J = translation_jacobian(aff1(), g, "left")
    expected = np.array(J_sym.subs({a: 1.7, b: -0.4, x: 1, y: 0}).tolist(), dtype=float)
    assert np.allclose(J, expected)
    assert np.isclose(np.linalg.det(J), 1.7 ** 2)


@pytest.mark.parametrize("G", CATALOG, ids=lambda G: G.name)
def test_dual_matches_finite_differences(G, rng):
    g, at = random_elements(G, rng, 10), random_elements(G, rng, 10)
    for side in ("left", "right"):
        Jd = translation_jacobian(G, g, side, at)
        Jf = translation_jacobian(G, g, side, at, method="fd")
        scale = np.maximum(np.abs(Jd), 1.0)
        assert np.max(np.abs(Jd - Jf) / scale) <= 1e-8
        translation_jacobian(G, g, side, at, method="both")


@pytest.mark.parametrize("G", CATALOG, ids=lambda G: G.name)
def test_haar_density_pinned_at_identity(G):
    assert np.isclose(haar_density(G, G.identity_array()), 1.0)
    assert np.isclose(modular(G, G.identity_array()), 1.0)


@given(pos, real)
def test_aff1_density_and_modular(a, b):
    G = aff1()
    h = np.array([a, b])
    assert np.isclose(haar_density(G, h), 1.0 / a ** 2, rtol=1e-12)
    delta, dr, dl = modular_parts(G, h)
    assert np.isclose(delta, 1.0 / a, rtol=1e-12)
    assert np.isclose(dr, a) and np.isclose(dl, a ** 2)


@pytest.mark.parametrize("G", [heis3(), euclidean(4)], ids=lambda G: G.name)
def test_unimodular_groups(G, rng):
    h = random_elements(G, rng, 100)
    assert np.max(np.abs(modular(G, h) - 1.0)) <= 1e-10
    assert np.max(np.abs(haar_density(G, h) - 1.0)) <= 1e-10


@pytest.mark.parametrize("G", CATALOG, ids=lambda G: G.name)
def test_modular_is_multiplicative(G, rng):
    x, y = random_elements(G, rng, 200), random_elements(G, rng, 200)
    lhs = modular(G, multiply(G, x, y))
    rhs = modular(G, x) * modular(G, y)
    assert np.max(np.abs(lhs / rhs - 1.0)) <= 1e-9


@pytest.mark.parametrize("G", CATALOG, ids=lambda G: G.name)
def test_chart_point_independence(G, rng):
    """rho(gh) |det dR_h(g)| / rho(g) does not depend on g and equals Delta(h)."""
    h = random_elements(G, rng, 1)[0]
    g = random_elements(G, rng, 100)
    gh = multiply(G, g, np.broadcast_to(h, g.shape))
    J = translation_jacobian(G, h, "right", at=g)
    vals = haar_density(G, gh) * np.abs(np.linalg.det(J)) / haar_density(G, g)
    assert (vals.max() - vals.min()) / vals.mean() <= 1e-8
    assert np.allclose(vals, modular(G, h), rtol=1e-8)


@pytest.mark.parametrize("name,center,g0", [
    ("aff1", (1.0, 0.2), (1.6, -0.3)),
    ("borel3", (1.0, 1.1, 0.9, 0.1, -0.2, 0.2), (1.2, 0.8, 1.1, 0.0, 0.0, 0.0)),
])
def test_left_invariance_of_haar_measure(name, center, g0):
    """int f(g0 g) dg = int f dg; these left translations are axis-aligned, so the bump stays a box bump."""
    G = by_name(name)
    radius = np.full(G.dim, 0.3)
    f = bump(center, radius)
    mu = bump_density(G, center, radius)
    g0 = np.asarray(g0)
    corners = np.array(np.meshgrid(*np.asarray(f.box), indexing="ij")).reshape(G.dim, -1).T
    img = multiply(G, np.broadcast_to(inverse(G, g0), corners.shape), corners)
    box = np.stack([img.min(0), img.max(0)], -1)
    shifted = Density(lambda p: f.fn(multiply(G, np.broadcast_to(g0, p.shape), p)), G, box, tuple(range(G.dim)))
    integ = Integrator(order=12, error_estimate=False)
    a = pair(mu, constant(G.dim), integ).value
    b = pair(shifted, constant(G.dim), integ).value
    assert abs(a - b) / abs(a) <= 1e-6


def test_left_invariance_heisenberg_shear():
    """Left translation in heis3 shears z by y; a Gaussian keeps the integrand smooth."""
    G = heis3()
    g0 = np.array([0.4, 0.5, -0.2])
    gauss = lambda p: np.exp(-np.sum(p ** 2, axis=-1))
    box = np.array([(-7.0, 7.0)] * 3)
    big = np.array([(-11.0, 11.0)] * 3)
    mu = Density(gauss, G, box, (0, 1, 2))
    shifted = Density(lambda p: gauss(multiply(G, np.broadcast_to(g0, p.shape), p)), G, big, (0, 1, 2))
    integ = Integrator(order=20, panels=4, error_estimate=False)
    a = pair(mu, constant(3), integ).value
    b = pair(shifted, constant(3), integ).value
    assert np.isclose(a, np.pi ** 1.5, rtol=1e-10)
    assert abs(a - b) / abs(a) <= 1e-6


@pytest.mark.parametrize("name,h", [("aff1", (2.0, 0.0)), ("aff1", (0.5, 0.0)), ("heis3", (0.0, 0.0, 0.7)),
                                    ("borel3", (1.3, 0.9, 1.1, 0.0, 0.0, 0.0))])
def test_modular_convention_translation_integral(name, h):
    """Delta(h) int f dg = int f(g h^-1) dg, with axis-aligned right translations."""
    G = by_name(name)
    center = G.identity_array() + 0.1
    mu = bump_density(G, center, np.full(G.dim, 0.3))
    h = np.asarray(h)
    translated = right_translate(mu, inverse(G, h))
    integ = Integrator(order=12, error_estimate=False)
    num = pair(translated, constant(G.dim), integ).value
    den = pair(mu, constant(G.dim), integ).value
    assert abs(num / den - modular(G, h)) / modular(G, h) <= 1e-6


@pytest.mark.parametrize("name,h,center,width,box", [
    ("aff1", (0.7, 0.4), (1.5, 0.0), (0.25, 1.0), [(0.05, 3.5), (-9.0, 9.0)]),
    ("heis3", (0.5, -0.3, 0.2), (0.0, 0.0, 0.0), (1.0, 1.0, 1.0), [(-8.0, 8.0)] * 3),
])
def test_modular_convention_sheared(name, h, center, width, box):
    """Same convention for shearing translations, using a Gaussian that is negligible outside the box."""
    G = by_name(name)
    c, w = np.asarray(center), np.asarray(width)
    gauss = lambda p: np.exp(-np.sum(((p - c) / w) ** 2, axis=-1))
    h = np.asarray(h)
    hinv = inverse(G, h)
    mu = Density(gauss, G, box, tuple(range(G.dim)))
    corners = np.array(np.meshgrid(*np.asarray(box), indexing="ij")).reshape(G.dim, -1).T
    img = multiply(G, corners, np.broadcast_to(h, corners.shape))
    tbox = np.stack([np.maximum(img.min(0), np.asarray(G.domain.lower) + 1e-3), img.max(0)], -1)
    translated = Density(lambda p: gauss(multiply(G, p, np.broadcast_to(hinv, p.shape))), G, tbox,
                         tuple(range(G.dim)))
    integ = Integrator(order=24, panels=4, error_estimate=False)
    num = pair(translated, constant(G.dim), integ).value
    den = pair(mu, constant(G.dim), integ).value
    assert abs(num / den - modular(G, h)) / modular(G, h) <= 1e-6


def test_degenerate_chart_detected():
    from haarpush.groups import GroupChart
    G = GroupChart("flat", 1, lambda x, y: (x[0] + y[0] * 0.0,), lambda x: (-x[0],), (0.0,))
    with pytest.raises(ChartError, match="chart degenerate at point"):
        haar_density(G, np.array([0.3]))


def test_by_name():
    assert by_name("R^n:3").dim == 3
    assert by_name("borel3").dim == 6
    with pytest.raises(KeyError):
        by_name("so3")
