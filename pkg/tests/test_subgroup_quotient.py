import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from haarpush.chains import get_chain, positive_reals, relabel
from haarpush.errors import NotNormalError, SubgroupError
from haarpush.groups import aff1, borel3, euclidean, heis3, multiply, random_elements
from haarpush.integrate import Integrator
from haarpush.measure import bump
from haarpush.quotient import (CosetSpace, QuotientPresentation, Split, SubgroupEmbedding, check_descent,
                               descend_map, weil_normalize)


def center(G=None):
    G = G or heis3()
    Z = relabel(euclidean(1), "heis3-center")
    return SubgroupEmbedding(Z, G, lambda t: (0.0, 0.0, t[0]), lambda g: (g[2],), "Z")


def heis_y():
    G = heis3()
    return SubgroupEmbedding(relabel(euclidean(1), "heis3-y"), G, lambda t: (0.0, t[0], 0.0), lambda g: (g[1],), "Y")


def aff_translations():
    G = aff1()
    return SubgroupEmbedding(relabel(euclidean(1), "aff1-b"), G, lambda t: (1.0, t[0]), lambda g: (g[1],), "T")


finite_xy = st.floats(-3, 3, allow_nan=False)


@given(finite_xy, finite_xy, finite_xy, finite_xy)
def test_heis_center_quotient_is_addition(x1, y1, x2, y2):
    Q = QuotientPresentation(center(), Split((0, 1), (2,)), samples=50)
    got = multiply(Q.raw, np.array([x1, y1]), np.array([x2, y2]))
    np.testing.assert_allclose(got, [x1 + x2, y1 + y2], rtol=0, atol=1e-12)


def test_project_section_identities(rng):
    for Q in (QuotientPresentation(center(), Split((0, 1), (2,))),
              QuotientPresentation(aff_translations(), Split((0,), (1,)))):
        G = Q.group
        g = random_elements(G, rng, 300)
        b = Q.project(g)
        np.testing.assert_array_equal(Q.project(Q.section(b)), b)
        rebuilt = multiply(G, Q.section(b), Q.subgroup.include_points(Q.fiber_element(g)))
        np.testing.assert_allclose(rebuilt, g, rtol=1e-12, atol=1e-12)


@pytest.mark.parametrize("make", [
    lambda: QuotientPresentation(SubgroupEmbedding(euclidean(1), euclidean(2), lambda t: (t[0], 0.0),
                                                   lambda g: (g[0],), "x-axis"), Split((1,), (0,))),
    lambda: QuotientPresentation(center(), Split((0, 1), (2,))),
    # dg = a^-2 da db, fiber measure dt with b = a t, quotient Haar da / a: the scale is 1
    lambda: QuotientPresentation(aff_translations(), Split((0,), (1,))),
])
def test_weil_scale_closed_form(make):
    Q = make()
    assert Q.weil_scale == pytest.approx(1.0, abs=1e-12)


def test_weil_scale_independent_of_normalizer():
    chain = get_chain("borel3-aff-center")
    Q = chain.Q
    integ = Integrator(order=10)
    cs = [weil_normalize(Q, bump(c, r), integ)
          for c, r in [((1.0, 1.0, 1.0, 0.0, 0.0, 0.0), (0.3,) * 6),
                       ((1.2, 0.9, 1.1, 0.3, -0.2, 0.1), (0.25, 0.4, 0.3, 0.5, 0.2, 0.35))]]
    assert abs(cs[0] - cs[1]) <= 1e-8 * abs(cs[0])


def test_not_normal_refused():
    G = aff1()
    D = SubgroupEmbedding(positive_reals("aff1-diag"), G, lambda h: (h[0], 0.0), lambda g: (g[0],), "D")
    CosetSpace(D, Split((1,), (0,)))  # a valid coset space
    with pytest.raises(NotNormalError, match="subgroup not normal under chart split"):
        QuotientPresentation(D, Split((1,), (0,)))


def test_split_must_trivialize_fiber():
    with pytest.raises(SubgroupError, match="split does not trivialize fiber"):
        CosetSpace(heis_y(), Split((0, 2), (1,)))
    with pytest.raises(SubgroupError, match="split does not trivialize fiber"):
        CosetSpace(center(), Split((0,), (1, 2)))


def test_descend_map_errors():
    Q = QuotientPresentation(center(), Split((0, 1), (2,)))
    with pytest.raises(SubgroupError, match="chain violated"):
        descend_map(Q, heis_y(), Split((0, 2), (1,)), Split((), (0,)))
    G = heis3()
    XZ = SubgroupEmbedding(relabel(euclidean(2), "heis3-xz"), G, lambda h: (h[0], 0.0, h[1]),
                           lambda g: (g[0], g[2]), "XZ")
    with pytest.raises(SubgroupError, match="incompatible coordinate splits"):
        descend_map(Q, XZ, Split((2,), (0, 1)), Split((0,), (1,)))


@pytest.mark.parametrize("name", ["heis3-center", "heis3-xz-center", "aff1-scaling", "borel3-aff-center",
                                  "borel3-unipotent", "rn-plane"])
def test_square_of_canonical_maps_commutes(name, rng):
    d = get_chain(name).descent
    assert check_descent(d, rng, 500)
    g = random_elements(d.Q.group, rng, 200)
    np.testing.assert_allclose(d.p_Gbar_GH(d.p_G_Gbar(g)), d.p_G_GH(g), rtol=1e-12, atol=1e-12)


def test_borel_quotient_homomorphism(rng):
    Q = get_chain("borel3-aff-center").Q
    G = borel3()
    x, y = random_elements(G, rng, 500), random_elements(G, rng, 500)
    np.testing.assert_allclose(Q.project(multiply(G, x, y)), multiply(Q.raw, Q.project(x), Q.project(y)),
                               rtol=1e-12, atol=1e-12)
