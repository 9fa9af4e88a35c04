import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from haarpush.errors import ConfigError, NotNormalError, SubgroupError
from haarpush.finite import (ZERO, ComplexRational, FinMap, FinMeasure, alternating, counting_measure, cyclic,
                             dihedral4, dump_cayley, fin_cosets, fin_group, fin_modular, fin_pushforward,
                             fin_quotient_group, fin_subgroup, fin_weil_sums, is_normal, klein4, load_cayley,
                             point_mass, quaternion8, random_map, random_measure, symmetric)

GROUPS = [cyclic(8), symmetric(4), alternating(4), klein4(), dihedral4(), quaternion8()]


@pytest.mark.parametrize("G", GROUPS, ids=lambda G: G.name)
def test_tables_are_groups(G):
    assert G.validate()
    assert all(G.mul(i, G.inv(i)) == G.identity_index for i in range(G.order))


def test_orders():
    assert [G.order for G in GROUPS] == [8, 24, 12, 4, 8, 8]


def test_subgroup_closure_examples():
    S4 = symmetric(4)
    V4 = fin_subgroup(S4, ["(12)(34)", "(13)(24)"])
    assert len(V4) == 4
    # orbit-closure oracle: V4 is the identity plus the three double transpositions
    labels = sorted(S4.elements[i] for i in V4)
    assert labels == sorted(["()", "(1 2)(3 4)", "(1 3)(2 4)", "(1 4)(2 3)"])
    assert fin_subgroup(S4, []) == (S4.identity_index,)
    Z8 = load_cayley(dump_cayley(cyclic(8)))
    assert fin_subgroup(Z8, [2]) == (0, 2, 4, 6)


def test_cosets():
    S4 = symmetric(4)
    A4 = fin_subgroup(S4, ["(123)", "(12)(34)"])
    V4 = fin_subgroup(S4, ["(12)(34)", "(13)(24)"])
    assert len(A4) == 12
    assert len(fin_cosets(S4, A4)) == 2
    cs = fin_cosets(S4, V4)
    assert len(cs) == 6
    # exhaustive partition oracle
    assert sorted(itertools.chain.from_iterable(cs.cosets)) == list(range(24))
    for c in cs.cosets:
        g = c[0]
        assert set(c) == {S4.mul(g, h) for h in V4}
    assert len(fin_cosets(S4, (S4.identity_index,))) == 24
    with pytest.raises(SubgroupError, match="not a subgroup"):
        fin_cosets(S4, (S4.identity_index, S4.index("(123)")))


def test_quotient_groups():
    S4 = symmetric(4)
    V4 = fin_subgroup(S4, ["(12)(34)", "(13)(24)"])
    Gbar, p = fin_quotient_group(S4, V4)
    assert Gbar.order_multiset() == [1, 2, 2, 2, 3, 3]
    A4 = alternating(4)
    V = fin_subgroup(A4, ["(12)(34)", "(13)(24)"])
    C3, _ = fin_quotient_group(A4, V)
    assert C3.order_multiset() == [1, 3, 3]
    T, _ = fin_quotient_group(S4, tuple(range(24)))
    assert T.order == 1
    for a, b in itertools.product(range(24), repeat=2):
        assert p(S4.mul(a, b)) == Gbar.mul(p(a), p(b))
    H = fin_subgroup(S4, ["(12)"])
    assert not is_normal(S4, H)
    with pytest.raises(NotNormalError, match="subgroup not normal"):
        fin_quotient_group(S4, H)


def test_quaternion_orders():
    assert quaternion8().order_multiset() == [1, 2, 4, 4, 4, 4, 4, 4]
    assert dihedral4().order_multiset() == [1, 2, 2, 2, 2, 2, 4, 4]


def test_cayley_roundtrip_and_errors():
    for G in GROUPS:
        H = load_cayley(dump_cayley(G), G.name)
        assert H.table == G.table and H.elements == G.elements
    with pytest.raises(ConfigError):
        load_cayley("")
    with pytest.raises(SubgroupError):
        load_cayley("2\n0 1\n0 1\n")
    assert fin_group("Z5").order == 5
    with pytest.raises(ConfigError):
        fin_group("nope")


def test_complex_rational_parse():
    assert ComplexRational.parse("1/2-3i") == ComplexRational(Fraction(1, 2), Fraction(-3))
    assert ComplexRational.parse("-i") == ComplexRational(Fraction(0), Fraction(-1))
    z = ComplexRational.parse("2/3+1/4i")
    assert ComplexRational.parse(str(z)) == z


def test_pushforward_examples():
    S4 = symmetric(4)
    V4 = fin_subgroup(S4, ["(12)(34)", "(13)(24)"])
    p = fin_cosets(S4, V4).projection
    push = fin_pushforward(counting_measure(24), p)
    assert push == FinMeasure(6, {i: 4 for i in range(6)})
    for g in range(24):
        assert fin_pushforward(point_mass(24, g), p) == point_mass(6, p(g))
    assert fin_pushforward(FinMeasure(24), p) == FinMeasure(6)


sizes = st.integers(1, 12)


@given(st.integers(0, 2 ** 32 - 1), sizes, sizes, sizes)
def test_pushforward_laws_exact(seed, n1, n2, n3):
    rng = np.random.default_rng(seed)
    mu = random_measure(n1, rng)
    p12, p23 = random_map(n1, n2, rng), random_map(n2, n3, rng)
    one_shot = fin_pushforward(mu, p12.then(p23))
    two_step = fin_pushforward(fin_pushforward(mu, p12), p23)
    assert one_shot == two_step
    # support of a pushforward lies in the image of the support
    assert fin_pushforward(mu, p12).support <= {p12(s) for s in mu.support}
    # pairing identity against a random rational alpha
    alpha = [Fraction(int(rng.integers(-5, 6)), int(rng.integers(1, 5))) for _ in range(n2)]
    assert mu.pair(lambda s: alpha[p12(s)]) == fin_pushforward(mu, p12).pair(alpha)


@given(st.integers(0, 2 ** 32 - 1))
def test_pushforward_linearity(seed):
    rng = np.random.default_rng(seed)
    m1, m2 = random_measure(10, rng), random_measure(10, rng)
    p = random_map(10, 4, rng)
    a, b = ComplexRational.parse("2/3-i"), ComplexRational.parse("5")
    lhs = fin_pushforward(m1.scale(a) + m2.scale(b), p)
    rhs = fin_pushforward(m1, p).scale(a) + fin_pushforward(m2, p).scale(b)
    assert lhs == rhs


@pytest.mark.parametrize("G", GROUPS, ids=lambda G: G.name)
def test_finite_groups_are_unimodular(G):
    f = [Fraction(i * i + 1, 3) for i in range(G.order)]
    assert all(fin_modular(G, h, f) == 1 for h in range(G.order))


@pytest.mark.parametrize("G,gens", [(symmetric(4), ["(12)(34)", "(13)(24)"]), (cyclic(8), [4]),
                                    (quaternion8(), [1])], ids=["S4/V4", "Z8/Z2", "Q8/<1>"])
def test_weil_sums_exact(G, gens):
    N = fin_subgroup(G, gens)
    rng = np.random.default_rng(3)
    beta = random_measure(G.order, rng, density=1.0)
    total, nested = fin_weil_sums(G, N, [beta[i] for i in range(G.order)])
    assert total == nested and total != ZERO


def test_finmap_validation():
    with pytest.raises(ValueError):
        FinMap(3, 2, [0, 1])
    with pytest.raises(ValueError):
        FinMap(2, 2, [0, 2])
