"""Catalog of subgroup chains N < H < G with N normal in G.

Each Lie chain bundles the coordinate splits, a few densities in M_H(G)
(compact and product-form), densities that must be refused, a right shift
h' in H and the grid used for modular-function checks.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import ConfigError
from .finite import FinGroup, cyclic, fin_subgroup, is_normal, symmetric
from .groups import Domain, GroupChart, aff1, borel3, euclidean, heis3
from .integrate import Integrator
from .measure import TestFunction, bump, bump_density, product_density
from .quotient import (Descent, QuotientPresentation, Split, SubgroupEmbedding, check_embedding, descend_map,
                       trivial_subgroup)


RATIONAL_SCALE = 3.0


def relabel(chart: GroupChart, name, embed=None, description="") -> GroupChart:
    """Same group law under another name (and matrix embedding)."""
    return dataclasses.replace(chart, name=name, embed=embed, description=description or chart.description)


def positive_reals(name="R>0", embed=None) -> GroupChart:
    return GroupChart(name, 1, lambda x, y: (x[0] * y[0],), lambda x: (1.0 / x[0],), (1.0,), embed,
                      Domain.positive(1, [0]), description="multiplicative group of positive reals",
                      haar=lambda g: 1.0 / g[..., 0])


def rational(coords, label="1/(1+|x-m|^2/L^2)", center=None, scale=RATIONAL_SCALE):
    """Smooth, nowhere-vanishing factor 1 / (1 + |x - m|^2 / L^2) on the free coordinates.

    A wide scale L keeps the complex poles far from the unit-size integration
    windows, so Gauss rules resolve the factor at modest order.
    """
    k = len(coords)
    m = np.zeros(k) if center is None else np.asarray(center, dtype=float)
    inv = 1.0 / scale ** 2
    return TestFunction(lambda p: 1.0 / (1.0 + inv * np.sum((p - m) ** 2, axis=-1)), [(-np.inf, np.inf)] * k,
                        label=label)


def product_form(G, free, compact, center, radius, m=None, label=None):
    return product_density(G, free, rational(free, center=m), compact, bump(center, radius), label)


@dataclass
class LieChain:
    name: str
    G: GroupChart
    H: SubgroupEmbedding
    N: SubgroupEmbedding
    split_H: Split
    split_N: Split
    split_NH: Split
    densities: list
    refused: list = field(default_factory=list)
    right_shift: tuple = ()
    modular_oracle: object = None
    linear_points: int = 5
    cover_tests: bool = False
    integrator: Integrator = field(default_factory=Integrator)
    description: str = ""
    checks: tuple = ("main1", "main2", "main3", "main4", "quotient_pushforward", "modular", "right_translation",
                     "weil", "normal_restriction", "invariants")
    tolerances: dict = field(default_factory=dict)
    backend: str = "lie"

    @property
    def n_is_h(self):
        return self.N.sub.dim == self.H.sub.dim

    @cached_property
    def Q(self) -> QuotientPresentation:
        return QuotientPresentation(self.N, self.split_N, name=f"{self.G.name}/{self.N.name}",
                                    integrator=self.integrator)

    @cached_property
    def descent(self) -> Descent:
        for emb in (self.H, self.N):
            check_embedding(emb, np.random.default_rng(1))
        return descend_map(self.Q, self.H, self.split_H, self.split_NH, integrator=self.integrator)

    def with_integrator(self, integrator: Integrator) -> "LieChain":
        """Fresh copy (caches dropped) using another integrator."""
        fields = {f.name: getattr(self, f.name) for f in dataclasses.fields(self)}
        fields["integrator"] = integrator
        return LieChain(**fields)

    def h_grid(self):
        """Log grid on positive coordinates of H, linear grid elsewhere (tensor product)."""
        Hs = self.H.sub
        axes = []
        for i in range(Hs.dim):
            if Hs.domain.lower[i] == 0.0:
                axes.append(np.geomspace(0.25, 4.0, 5))
            else:
                axes.append(np.linspace(-1.0, 1.0, self.linear_points))
        if not axes:
            return np.zeros((1, 0))
        return np.array(np.meshgrid(*axes, indexing="ij")).reshape(len(axes), -1).T


@dataclass
class FinChain:
    name: str
    G: FinGroup
    H: tuple
    N: tuple
    description: str = ""
    checks: tuple = ("main1", "main2", "main3", "main4", "quotient_pushforward", "modular", "right_translation",
                     "weil", "normal_restriction", "compose", "invariants")
    backend: str = "finite"
    tolerances: dict = field(default_factory=dict)

    def __post_init__(self):
        if not set(self.N) <= set(self.H):
            raise ConfigError("chain violated: N must be contained in H", None)
        if not is_normal(self.G, self.N):
            raise ConfigError("subgroup not normal", None)


# ---------------------------------------------------------------- Lie catalog


def heis3_center() -> LieChain:
    G = heis3()
    Z = relabel(euclidean(1), "heis3-center", lambda x: [[1.0, 0.0, x[0]], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
                "center {(0, 0, z)} of heis3")
    N = SubgroupEmbedding(Z, G, lambda t: (0.0, 0.0, t[0]), lambda g: (g[2],), "Z")
    dens = [
        bump_density(G, (0.1, -0.2, 0.3), (0.8, 0.7, 0.9)),
        product_form(G, (0, 1), (2,), (0.2,), (0.8,), label="u(x,y) v(z)"),
    ]
    refused = [product_form(G, (2,), (0, 1), (0.0, 0.1), (0.7, 0.8), label="u(z) v(x,y)")]
    return LieChain("heis3-center", G, N, N, Split((0, 1), (2,)), Split((0, 1), (2,)), Split((), (0,)), dens,
                    refused, right_shift=(0.5,), description="Heisenberg group over its center (N = H)")


def heis3_xz_center() -> LieChain:
    G = heis3()
    Z = relabel(euclidean(1), "heis3-center", lambda x: [[1.0, 0.0, x[0]], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    XZ = relabel(euclidean(2), "heis3-xz", lambda x: [[1.0, x[0], x[1]], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
                 "abelian subgroup {(x, 0, z)} of heis3")
    N = SubgroupEmbedding(Z, G, lambda t: (0.0, 0.0, t[0]), lambda g: (g[2],), "Z")
    H = SubgroupEmbedding(XZ, G, lambda h: (h[0], 0.0, h[1]), lambda g: (g[0], g[2]), "XZ")
    dens = [
        bump_density(G, (0.2, 0.1, -0.1), (0.7, 0.8, 0.9)),
        product_form(G, (1,), (0, 2), (0.1, 0.2), (0.6, 0.9), label="u(y) v(x,z)"),
    ]
    refused = [product_form(G, (0, 1), (2,), (0.0,), (0.7,), label="u(x,y) v(z)")]
    return LieChain("heis3-xz-center", G, H, N, Split((1,), (0, 2)), Split((0, 1), (2,)), Split((0,), (1,)), dens,
                    refused, right_shift=(0.3, 0.5), description="Heisenberg group, H = {(x, 0, z)}, N = center")


def aff1_scaling() -> LieChain:
    G = aff1()
    D = positive_reals("aff1-diag", lambda x: [[x[0], 0.0], [0.0, 1.0]])
    H = SubgroupEmbedding(D, G, lambda h: (h[0], 0.0), lambda g: (g[0],), "D")
    N = trivial_subgroup(G)
    dens = [
        bump_density(G, (1.1, 0.2), (0.5, 0.8)),
        bump_density(G, (0.8, -0.3), (0.3, 0.6)),
        product_form(G, (1,), (0,), (1.2,), (0.5,), label="u(b) v(a)"),
    ]
    refused = [product_form(G, (0,), (1,), (0.0,), (0.5,), m=(1.0,), label="u(a) v(b)")]
    return LieChain("aff1-scaling", G, H, N, Split((1,), (0,)), Split((0, 1), ()), Split((0,), ()), dens, refused,
                    right_shift=(2.0,),
                    description="ax+b group, H = {(a, 0)}, N = {e}")


def _borel_parts():
    B = borel3()
    E13 = relabel(euclidean(1), "borel3-e13", lambda x: [[1.0, 0.0, x[0]], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
                  "root subgroup {I + t E13}")
    HA = relabel(aff1(), "borel3-aff", lambda x: [[x[0], 0.0, x[1]], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
                 "copy of the ax+b group generated by diag(a, 1, 1) and I + t E13")
    N = SubgroupEmbedding(E13, B, lambda t: (1.0, 1.0, 1.0, 0.0, 0.0, t[0]), lambda g: (g[5],), "N13")
    H = SubgroupEmbedding(HA, B, lambda h: (h[0], 1.0, 1.0, 0.0, 0.0, h[1]), lambda g: (g[0], g[5]), "Haff")
    return B, H, N


def borel3_aff_center() -> LieChain:
    B, H, N = _borel_parts()
    dens = [
        bump_density(B, (1.1, 0.9, 1.2, 0.1, -0.1, 0.2), (0.3, 0.25, 0.3, 0.5, 0.5, 0.6)),
        product_form(B, (1, 2, 3, 4), (0, 5), (1.0, -0.1), (0.35, 0.7), m=(1.0, 1.0, 0.0, 0.0),
                     label="u(a2,a3,u12,u23) v(a1,u13)"),
    ]
    refused = [product_form(B, (0, 1, 2, 3, 4), (5,), (0.0,), (0.6,), m=(1.0, 1.0, 1.0, 0.0, 0.0),
                            label="u(a1,a2,a3,u12,u23) v(u13)")]
    from .groups import modular as _modular

    def oracle(h):
        # the standalone ax+b group at (a, t)
        return _modular(aff1(), np.asarray(h))

    return LieChain("borel3-aff-center", B, H, N, Split((1, 2, 3, 4), (0, 5)), Split((0, 1, 2, 3, 4), (5,)),
                    Split((0,), (1,)), dens, refused, right_shift=(2.0, 0.0), modular_oracle=oracle,
                    linear_points=3, cover_tests=True, integrator=Integrator(order=8, panels=1),
                    description="upper-triangular B3, N = {I + t E13}, H = <diag(a, 1, 1), N>",
                    tolerances={"main3": 1e-4, "right_translation": 1e-4})


def borel3_unipotent() -> LieChain:
    B = borel3()
    U = relabel(heis3(), "borel3-unipotent", heis3().embed, "unipotent radical of B3")
    N = SubgroupEmbedding(U, B, lambda n: (1.0, 1.0, 1.0, n[0], n[1], n[2]), lambda g: (g[3], g[4], g[5]), "U3")
    dens = [
        bump_density(B, (0.9, 1.1, 1.0, 0.2, -0.1, 0.1), (0.3, 0.3, 0.25, 0.5, 0.6, 0.7)),
        product_form(B, (0, 1, 2), (3, 4, 5), (0.1, 0.0, -0.2), (0.5, 0.6, 0.7), m=(1.0, 1.0, 1.0),
                     label="u(a1,a2,a3) v(u12,u23,u13)"),
    ]
    refused = [product_form(B, (3, 4, 5), (0, 1, 2), (1.0, 1.1, 0.9), (0.3, 0.3, 0.3),
                            label="u(u12,u23,u13) v(a1,a2,a3)")]
    return LieChain("borel3-unipotent", B, N, N, Split((0, 1, 2), (3, 4, 5)), Split((0, 1, 2), (3, 4, 5)),
                    Split((), (0, 1, 2)), dens, refused, right_shift=(0.3, -0.2, 0.4), linear_points=3,
                    cover_tests=True, integrator=Integrator(order=8, panels=1),
                    description="B3 over its unipotent radical (N = H)",
                    # a unipotent right shift shears the bump support, so its kinks are not on box faces
                    tolerances={"main3": 1e-4, "right_translation": 2e-3, "right_translation_trivial_n": 2e-3})


def rn_plane() -> LieChain:
    G = euclidean(2)
    L = relabel(euclidean(1), "R^2-line", lambda x: [[1.0, 0.0, 0.0], [0.0, 1.0, x[0]], [0.0, 0.0, 1.0]],
                "line {(0, y)}")
    N = SubgroupEmbedding(L, G, lambda t: (0.0, t[0]), lambda g: (g[1],), "Y")
    dens = [
        bump_density(G, (0.3, -0.2), (0.9, 0.7)),
        product_form(G, (0,), (1,), (0.1,), (0.8,), label="u(x) v(y)"),
    ]
    refused = [product_form(G, (1,), (0,), (0.0,), (0.8,), label="u(y) v(x)")]
    return LieChain("rn-plane", G, N, N, Split((0,), (1,)), Split((0,), (1,)), Split((), (0,)), dens, refused,
                    right_shift=(0.7,), description="R^2 over the line {(0, y)} (N = H)")


def s4_a4_v4() -> FinChain:
    G = symmetric(4)
    H = fin_subgroup(G, ["(1 2 3)", "(1 2)(3 4)"])
    N = fin_subgroup(G, ["(1 2)(3 4)", "(1 3)(2 4)"])
    return FinChain("s4-a4-v4", G, H, N, "S4 > A4 > V4 (V4 normal in S4)")


def z8_z4_z2() -> FinChain:
    G = cyclic(8)
    return FinChain("z8-z4-z2", G, fin_subgroup(G, ["2"]), fin_subgroup(G, ["4"]), "Z/8 > Z/4 > Z/2")


LIE_CHAINS = {
    "aff1-scaling": aff1_scaling,
    "heis3-center": heis3_center,
    "heis3-xz-center": heis3_xz_center,
    "borel3-aff-center": borel3_aff_center,
    "borel3-unipotent": borel3_unipotent,
    "rn-plane": rn_plane,
}
FIN_CHAINS = {"s4-a4-v4": s4_a4_v4, "z8-z4-z2": z8_z4_z2}
ALIASES = {"S4-chain": "s4-a4-v4", "Z8-chain": "z8-z4-z2"}


def chain_names():
    return list(LIE_CHAINS) + list(FIN_CHAINS)


def get_chain(name):
    name = ALIASES.get(name, name)
    if name in LIE_CHAINS:
        return LIE_CHAINS[name]()
    if name in FIN_CHAINS:
        return FIN_CHAINS[name]()
    raise ConfigError(f"unknown chain {name!r}; known: {', '.join(chain_names())}", "chains")


def catalog():
    """Machine-readable listing of groups and chains."""
    from .finite import FINITE_GROUPS
    from .groups import CATALOG_GROUPS
    groups = [{"name": g, "kind": "lie"} for g in CATALOG_GROUPS]
    groups += [{"name": g, "kind": "finite"} for g in list(FINITE_GROUPS) + ["Z<n>"]]
    chains = []
    for name in chain_names():
        c = get_chain(name)
        aliases = [a for a, target in ALIASES.items() if target == name]
        chains.append({"name": name, "aliases": aliases, "backend": c.backend, "description": c.description,
                       "checks": list(c.checks)})
    return {"groups": groups, "chains": chains}
