import numpy as np
import pytest

from haarpush.chains import get_chain, product_form
from haarpush.errors import CertificateError, ChartError
from haarpush.groups import heis3, random_elements
from haarpush.integrate import Integrator, integrate_box
from haarpush.measure import bump, bump_density, check_membership, constant, pair, product_density
from haarpush.pushforward import (PushforwardHandle, build_fiber_average, handle, pull_back, pushforward_density,
                                  pushforward_pair)
from haarpush.quotient import QuotientPresentation, Split, compose, identity_projection, trivial_subgroup

INTEG = Integrator(order=12)


def test_identity_route_is_the_pairing():
    chain = get_chain("aff1-scaling")
    mu = chain.densities[0]
    cert = check_membership(mu, chain.descent.GH)
    h = handle(mu, cert)
    alpha = bump((1.0, 0.1), (0.6, 0.9))
    a = pushforward_pair(mu, cert, h.route[0], alpha, INTEG).value
    assert a == pair(mu, alpha, INTEG).value


def test_heis_center_density_form():
    """phi = u(x, y) v(z): the fiber integral is u(x, y) * int v, with int (1 - t^2)^3 = 32/35."""
    chain = get_chain("heis3-center")
    G, Q = chain.G, chain.Q
    u = bump((0.1, 0.2), (0.6, 0.7))
    mu = product_density(G, (0, 1), u, (2,), bump((0.3,), (0.8,)))
    cert = check_membership(mu, Q)
    psi = pushforward_density(mu, cert, Q, INTEG)
    iv = 0.8 * 32 / 35
    b = random_elements(Q.raw, np.random.default_rng(1), 200, scale=0.5)
    np.testing.assert_allclose(psi(b), u(b) * iv, rtol=1e-13, atol=1e-15)
    alpha = bump((0.0, 0.0), (0.8, 0.9))
    lhs = pushforward_pair(mu, cert, Q.projection, alpha, INTEG).value
    au = integrate_box(lambda p: u.fn(p) * alpha.fn(p), [(-0.5, 0.7), (-0.5, 0.9)], INTEG,
                       [(-0.8, -0.5, 0.7, 0.8), (-0.9, -0.5, 0.9)]).value
    assert lhs == pytest.approx(iv * au, rel=1e-12)


def test_unbounded_product_form_density_form():
    """u non-compact on the base: psi = u * int v still holds pointwise."""
    chain = get_chain("heis3-center")
    mu = product_form(chain.G, (0, 1), (2,), (0.2,), (0.5,))
    cert = check_membership(mu, chain.Q)
    psi = pushforward_density(mu, cert, chain.Q, INTEG)
    assert psi.shape == "product_form"
    b = np.array([[3.0, -7.0], [0.0, 0.0], [40.0, 2.0]])
    g = np.c_[b, np.full(3, 0.2)]
    np.testing.assert_allclose(psi(b), mu(g) * 0.5 * 32 / 35, rtol=1e-13)


def test_trivial_normal_subgroup_keeps_the_density(rng):
    G = heis3()
    Q = QuotientPresentation(trivial_subgroup(G), Split((0, 1, 2), ()))
    mu = bump_density(G, (0.1, 0.2, 0.3), (0.5, 0.6, 0.7))
    psi = pushforward_density(mu, check_membership(mu, Q), Q)
    g = random_elements(G, rng, 300, scale=0.5)
    np.testing.assert_allclose(psi(g), mu(g), rtol=0, atol=1e-15)
    assert Q.weil_scale == pytest.approx(1.0, abs=1e-12)


def test_fiber_average_matches_direct_fiber_integral(rng):
    """aff1 / D with D = {(t, 0)}: alpha(b) = int nu((a0 t, b)) dt / t for any representative a0."""
    space = get_chain("aff1-scaling").descent.GH
    nu = bump((1.1, 0.2), (0.4, 0.5))
    alpha = build_fiber_average(nu, space, INTEG)
    for b in rng.uniform(-0.25, 0.65, 5):
        for a0 in (0.7, 1.0, 1.9):
            direct = integrate_box(lambda t: nu(np.c_[a0 * t[:, 0], np.full(len(t), b)]) / t[:, 0],
                                   [(0.7 / a0, 1.5 / a0)], Integrator(order=40)).value
            assert alpha(np.array([[b]]))[0] == pytest.approx(direct, rel=1e-10, abs=1e-14)
    with pytest.raises(CertificateError):
        build_fiber_average(constant(2), space)


def test_pull_back_and_route_mismatch():
    d = get_chain("heis3-xz-center").descent
    alpha = bump((0.3,), (0.5,))
    pb = pull_back(alpha, d.p_G_GH)
    g = np.array([[5.0, 0.3, -2.0]])
    assert pb(g)[0] == pytest.approx(1.0)
    with pytest.raises(ChartError, match="route mismatch"):
        compose(d.p_G_GH, d.p_Gbar_GbarHbar)
    mu = get_chain("heis3-xz-center").densities[0]
    cert = check_membership(mu, d.GH)
    with pytest.raises(CertificateError, match="route steps do not compose"):
        PushforwardHandle(mu, cert, (d.p_G_GH, d.p_Gbar_GbarHbar))
    with pytest.raises(CertificateError, match="route starts at"):
        pushforward_pair(mu, cert, d.p_Gbar_GH, alpha)


def test_missing_certificate_refused():
    chain = get_chain("heis3-center")
    mu = chain.densities[0]
    alpha = bump((0.0, 0.0), (0.5, 0.5))
    with pytest.raises(CertificateError, match=r"mu not certifiably in M\(p, X1\)"):
        pushforward_pair(mu, None, chain.Q.projection, alpha)
    refused = chain.refused[0]
    cert = check_membership(refused, QuotientPresentation(trivial_subgroup(chain.G), Split((0, 1, 2), ())))
    with pytest.raises(CertificateError, match="mu not certifiably in M_N"):
        pushforward_density(refused, cert, chain.Q)


def test_two_routes_agree_on_identity_composition():
    d = get_chain("heis3-xz-center").descent
    route = compose(identity_projection(d.Q.group), d.p_G_GH)
    assert route.positions == d.p_G_GH.positions
