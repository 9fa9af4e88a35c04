"""Closed subgroups, coset spaces and quotient groups realized by coordinate splits.

A split partitions the coordinates of G into *base* and *fiber* indices.  The
section s(b) fills the fiber coordinates with their identity values, the
projection G -> G/H keeps the base coordinates, and right multiplication by H
must move only the fiber coordinates.  These properties are checked on random
samples when a space is built.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable

import numpy as np

from .dual import Dual, jacobian, value
from .errors import ChartError, NotNormalError, SubgroupError
from .groups import (GroupChart, check_domain, components, haar_density, inverse, multiply,
                     random_elements, stack)
from .integrate import Integrator, integrate_box, tensor_nodes, tensor_rule
from .measure import TestFunction, bump, compact_density, constant, pair


@dataclass(frozen=True)
class Split:
    base: tuple
    fiber: tuple

    def __post_init__(self):
        object.__setattr__(self, "base", tuple(int(i) for i in self.base))
        object.__setattr__(self, "fiber", tuple(int(i) for i in self.fiber))

    def check(self, dim):
        if sorted(self.base + self.fiber) != list(range(dim)):
            raise SubgroupError(f"split {self} is not a partition of {dim} coordinates")


@dataclass(frozen=True)
class SubgroupEmbedding:
    """Closed subgroup given by its own chart and an injective homomorphism into ``parent``.

    ``restrict`` is a left inverse of ``include`` on the image.
    """

    sub: GroupChart
    parent: GroupChart
    include: Callable
    restrict: Callable
    name: str = ""

    def __post_init__(self):
        if not self.name:
            object.__setattr__(self, "name", self.sub.name)

    def include_points(self, h):
        h = check_domain(self.sub, h)
        return stack(self.include(components(h)), h.shape[:-1])

    def restrict_points(self, g):
        g = np.asarray(g, dtype=float)
        return stack(self.restrict(components(g)), g.shape[:-1])


def trivial_group(name="e") -> GroupChart:
    return GroupChart(name, 0, lambda x, y: (), lambda x: (), (), lambda x: [[1.0]],
                      description="trivial group")


def trivial_subgroup(G: GroupChart) -> SubgroupEmbedding:
    ident = tuple(float(v) for v in G.identity)
    return SubgroupEmbedding(trivial_group(f"{{e}}<{G.name}"), G, lambda x: ident, lambda g: (), "{e}")


def whole_group(G: GroupChart) -> SubgroupEmbedding:
    return SubgroupEmbedding(G, G, lambda x: tuple(x), lambda g: tuple(g), G.name)


def nested_embedding(inner: SubgroupEmbedding, outer: SubgroupEmbedding) -> SubgroupEmbedding:
    """Embedding of ``inner.sub`` into ``outer.sub`` when both sit in the same group."""
    if inner.parent.name != outer.parent.name:
        raise SubgroupError("embeddings refer to different groups")
    return SubgroupEmbedding(
        inner.sub,
        outer.sub,
        lambda n: outer.restrict(inner.include(n)),
        lambda h: inner.restrict(outer.include(h)),
        inner.name,
    )


def _close(a, b, tol):
    return np.max(np.abs(a - b) / (1.0 + np.abs(b)), initial=0.0) <= tol


def check_embedding(emb: SubgroupEmbedding, rng, n=200, tol=1e-10):
    """Homomorphism, identity and matrix-compatibility checks on random samples."""
    H, G = emb.sub, emb.parent
    e = emb.include_points(H.identity_array())
    if not _close(e, G.identity_array(), tol):
        raise SubgroupError(f"{emb.name}: include(e_H) != e_G")
    if H.dim == 0:
        return True
    x, y = random_elements(H, rng, n), random_elements(H, rng, n)
    ix, iy = emb.include_points(x), emb.include_points(y)
    if not np.all(G.domain.contains(ix)):
        raise SubgroupError(f"{emb.name}: image leaves the domain of {G.name}")
    if not _close(emb.include_points(multiply(H, x, y)), multiply(G, ix, iy), tol):
        raise SubgroupError(f"{emb.name}: include is not a homomorphism")
    if not _close(emb.restrict_points(ix), x, tol):
        raise SubgroupError(f"{emb.name}: restrict is not a left inverse of include")
    if H.embed is not None and G.embed is not None:
        from .groups import embed
        mg, mh = embed(G, ix), embed(H, x)
        if mg.shape == mh.shape and not _close(mg, mh, tol):
            raise SubgroupError(f"{emb.name}: matrix embeddings disagree")
    return True


class CosetSpace:
    """Left coset space G/H presented by a coordinate split."""

    def __init__(self, emb: SubgroupEmbedding, split: Split, name=None, validate=True, samples=1000, seed=0):
        G = emb.parent
        split.check(G.dim)
        if len(split.fiber) != emb.sub.dim:
            raise SubgroupError(
                f"split does not trivialize fiber: {len(split.fiber)} fiber coordinates for a "
                f"{emb.sub.dim}-dimensional subgroup")
        self.group = G
        self.subgroup = emb
        self.split = split
        self.base = split.base
        self.fiber = split.fiber
        self.name = name or f"{G.name}/{emb.name}"
        self.dim = len(split.base)
        self.domain = G.domain.restrict(split.base)
        self.root_chart = G.root_chart
        self.root_lineage = tuple(G.root_lineage[i] for i in split.base)
        self._ident = tuple(float(v) for v in G.identity)
        if validate:
            self.validate(np.random.default_rng(seed), samples)

    def __repr__(self):
        return f"{type(self).__name__}({self.name!r})"

    # --- maps
    def section_components(self, b):
        out = list(self._ident)
        for k, i in enumerate(self.base):
            out[i] = b[k]
        return out

    def section(self, b):
        b = np.asarray(b, dtype=float)
        return stack(self.section_components(components(b)), b.shape[:-1])

    def project_components(self, g):
        return tuple(g[i] for i in self.base)

    def project(self, g):
        g = check_domain(self.group, g)
        return g[..., list(self.base)]

    def fiber_element(self, g):
        """n(g) in the subgroup chart with g = s(p(g)) * n(g)."""
        g = check_domain(self.group, g)
        s_inv = inverse(self.group, self.section(g[..., list(self.base)]))
        return self.subgroup.restrict_points(multiply(self.group, s_inv, g))

    @cached_property
    def projection(self):
        return make_projection(f"p[{self.group.name}->{self.name}]", self.group, self, self.project, validate=False)

    # --- invariants
    def validate(self, rng, n=1000, tol=1e-9):
        G, emb = self.group, self.subgroup
        g = random_elements(G, rng, n)
        b = self.project(g)
        if not np.array_equal(self.project(self.section(b)), b):
            raise SubgroupError(f"{self.name}: section property fails")
        if emb.sub.dim:
            h = emb.include_points(random_elements(emb.sub, rng, n))
            if not _close(self.project(multiply(G, g, h)), b, tol):
                raise SubgroupError(f"split does not trivialize fiber: right {emb.name}-translation moves base coordinates")
        n_g = self.fiber_element(g)
        if not np.all(emb.sub.domain.contains(n_g)):
            raise SubgroupError(f"split does not trivialize fiber: decomposition leaves {emb.sub.name}")
        rebuilt = multiply(G, self.section(b), emb.include_points(n_g))
        if not _close(rebuilt, g, tol):
            raise SubgroupError("split does not trivialize fiber: g != s(p(g)) n(g)")
        return True

    # --- fiber integration
    def fiber_weight_parts(self, b, f):
        """For base points ``b`` (shape (..., d_b)) and fiber coordinates ``f`` (broadcastable),
        return the G-points ``(b, f)``, their subgroup parts n(b, f) and the Haar weight
        rho_H(n) |det dn/df| of the change of variables from dh to df."""
        G, emb = self.group, self.subgroup
        k = len(self.fiber)
        b = np.asarray(b, dtype=float)
        f = np.asarray(f, dtype=float)
        shape = np.broadcast_shapes(b.shape[:-1], f.shape[:-1])
        bc = [np.broadcast_to(c, shape) for c in components(b)]
        fd = Dual.seed([np.broadcast_to(c, shape) for c in components(f)], k)
        g_comps = list(self._ident)
        for j, i in enumerate(self.base):
            g_comps[i] = bc[j]
        for j, i in enumerate(self.fiber):
            g_comps[i] = fd[j]
        s_inv = G.inv(self.section_components(bc))
        n = emb.restrict(G.mul(s_inv, g_comps))
        J = jacobian(n, k, shape)
        det = np.abs(np.linalg.det(J)) if k else np.ones(shape)
        g_pts = stack([value(c) for c in g_comps], shape)
        n_pts = stack([value(c) for c in n], shape)
        rho = haar_density(emb.sub, n_pts) if k else np.ones(shape)
        return g_pts, n_pts, rho * det

    def fiber_integrate(self, b, F, f_box, f_breaks=None, integrator: Integrator | None = None, extra=None):
        """int_H F(s(b) h, h) dh for each base point, in fiber coordinates.

        ``F(g_pts, n_pts)`` receives arrays of shape (M, K, dim G) and (M, K, dim H)
        with g = s(b) n and must vanish for fiber coordinates outside ``f_box``.
        When ``extra`` (one row per base point) is given it is passed as a third
        argument of shape (M, 1, e).
        """
        integrator = (integrator or Integrator()).as_gauss()
        b = np.asarray(b, dtype=float).reshape(-1, self.dim)
        nodes, weights = tensor_nodes(tensor_rule(f_box, integrator.order, integrator.panels, f_breaks)
                                      if len(self.fiber) else [])
        K = len(weights)
        out = []
        step = max(1, integrator.chunk // max(K, 1))
        for start in range(0, len(b), step):
            bb = b[start:start + step][:, None, :]
            g_pts, n_pts, w = self.fiber_weight_parts(bb, nodes[None, :, :])
            if extra is None:
                vals = np.asarray(F(g_pts, n_pts))
            else:
                vals = np.asarray(F(g_pts, n_pts, np.asarray(extra)[start:start + step][:, None, :]))
            out.append(np.sum(vals * w * weights, axis=-1))
        if not out:
            return np.zeros(0)
        return np.concatenate(out)


class QuotientPresentation(CosetSpace):
    """G/N for a normal subgroup N, with its induced group chart and Weil-normalized Haar measure."""

    def __init__(self, emb: SubgroupEmbedding, split: Split, name=None, integrator=None, validate=True,
                 samples=1000, seed=0, normalizers=None):
        super().__init__(emb, split, name=name, validate=False)
        G = self.group
        base = list(self.base)
        sec = self.section_components

        def mul(x, y):
            r = G.mul(sec(list(x)), sec(list(y)))
            return tuple(r[i] for i in base)

        def inv(x):
            r = G.inv(sec(list(x)))
            return tuple(r[i] for i in base)

        self.integrator = integrator or Integrator()
        self.raw = GroupChart(self.name, self.dim, mul, inv, tuple(G.identity[i] for i in base), None,
                              self.domain, 1.0, self.root_chart, self.root_lineage,
                              description=f"quotient of {G.name} by {emb.name}")
        self._normalizers = normalizers
        if validate:
            rng = np.random.default_rng(seed)
            self.validate(rng, samples)
            self.check_normal(rng, samples)
            self.check_homomorphism(rng, samples)

    def check_normal(self, rng, n=1000, tol=1e-8):
        G, emb = self.group, self.subgroup
        if emb.sub.dim == 0:
            return True
        g = random_elements(G, rng, n)
        nn = emb.include_points(random_elements(emb.sub, rng, n))
        conj = multiply(G, multiply(G, g, nn), inverse(G, g))
        e = np.broadcast_to(G.identity_array()[list(self.base)], (n, self.dim))
        if not np.all(G.domain.contains(conj)) or not _close(self.project(conj), e, tol):
            raise NotNormalError("subgroup not normal under chart split")
        return True

    def check_homomorphism(self, rng, n=1000, tol=1e-9):
        G = self.group
        x, y = random_elements(G, rng, n), random_elements(G, rng, n)
        lhs = self.project(multiply(G, x, y))
        rhs = multiply(self.raw, self.project(x), self.project(y))
        if not _close(lhs, rhs, tol):
            raise NotNormalError("subgroup not normal under chart split: projection is not a homomorphism")
        return True

    def default_normalizers(self):
        if self._normalizers is not None:
            return list(self._normalizers)
        G = self.group
        rng = np.random.default_rng(12345)
        center0 = G.identity_array()
        out = []
        for r in (0.35, 0.3, 0.4):
            c = center0 + rng.uniform(-0.15, 0.15, G.dim)
            out.append(bump(c, np.full(G.dim, r)))
        return out

    @cached_property
    def weil(self):
        """(scale, relative spread across the normalizer bumps)."""
        cs = [weil_normalize(self, beta, self.integrator) for beta in self.default_normalizers()]
        c = cs[0]
        spread = (max(cs) - min(cs)) / c
        if spread > 1e-5:
            raise ChartError(f"Weil scale inconsistent across normalizers (relative spread {spread:.2e})")
        return c, spread

    @property
    def weil_scale(self):
        return self.weil[0]

    @cached_property
    def quotient(self) -> GroupChart:
        return self.raw.with_scale(self.weil_scale)


def fiber_sum_integral(space: CosetSpace, beta: TestFunction, integrator=None):
    """int_{G/H, raw} int_H beta(s(b) h) dh db for a quotient (raw quotient Haar on the base)."""
    box = np.asarray(beta.box)
    base, fiber = list(space.base), list(space.fiber)
    f_box = box[fiber]
    f_breaks = [beta.breaks[i] for i in fiber]
    inner_int = (integrator or Integrator()).as_gauss()

    def outer(b):
        inner = space.fiber_integrate(b, lambda g, n: beta(g), f_box, f_breaks, inner_int)
        return inner * haar_density(space.raw, b)

    return integrate_box(outer, box[base], integrator, [beta.breaks[i] for i in base])


def weil_normalize(Q: QuotientPresentation, beta: TestFunction, integrator=None) -> float:
    """Scale c with  int_G beta dg = c * int_{G/N} int_N beta(s(x) n) dn dx_raw."""
    G = Q.group
    num = pair(compact_density(G, beta), constant(G.dim), integrator)
    if abs(num.value) <= 1e-12 * max(num.magnitude, 1e-300):
        raise ChartError("degenerate normalizer function")
    den = fiber_sum_integral(Q, beta, integrator)
    return float(np.real(num.value / den.value))


# ---------------------------------------------------------------- projections


@dataclass(frozen=True)
class Projection:
    """Canonical map between spaces of one tower; acts as a coordinate pick."""

    name: str
    source: object
    target: object
    fn: Callable
    positions: tuple

    def __call__(self, pts):
        return self.fn(np.asarray(pts, dtype=float))


def make_projection(name, source, target, fn, validate=True, rng=None, samples=500, tol=1e-9):
    if source.root_chart.name != target.root_chart.name:
        raise ChartError(f"{name}: spaces belong to different groups")
    src = list(source.root_lineage)
    try:
        positions = tuple(src.index(i) for i in target.root_lineage)
    except ValueError:
        raise ChartError(f"{name}: target coordinates are not a subset of source coordinates") from None
    p = Projection(name, source, target, fn, positions)
    if validate:
        rng = rng or np.random.default_rng(0)
        x = random_elements(source, rng, samples)
        if not _close(p(x), x[:, list(positions)], tol):
            raise ChartError(f"{name}: map is not a coordinate projection in these charts")
    return p


def identity_projection(space):
    return Projection(f"id[{space.name}]", space, space, lambda x: x, tuple(range(space.dim)))


def compose(*maps: Projection) -> Projection:
    """compose(p12, p23) is p23 o p12."""
    for a, b in zip(maps[:-1], maps[1:]):
        if a.target.name != b.source.name:
            raise ChartError(f"route mismatch: {a.name} lands in {a.target.name}, {b.name} starts at {b.source.name}")
    fns = [m.fn for m in maps]

    def fn(x):
        for f in fns:
            x = f(x)
        return x

    positions = tuple(range(maps[0].source.dim))
    for m in maps:
        positions = tuple(positions[i] for i in m.positions)
    return Projection(" o ".join(m.name for m in reversed(maps)), maps[0].source, maps[-1].target, fn, positions)


@dataclass
class Descent:
    """All spaces and canonical maps of a chain N < H < G with N normal in G."""

    GH: CosetSpace
    Q: QuotientPresentation
    QH: QuotientPresentation
    hbar_in_gbar: SubgroupEmbedding
    GbarHbar: CosetSpace
    p_G_GH: Projection
    p_G_Gbar: Projection
    p_Gbar_GH: Projection
    p_GH_GbarHbar: Projection
    p_Gbar_GbarHbar: Projection


def descend_map(Q: QuotientPresentation, H: SubgroupEmbedding, split_H: Split, split_NH: Split,
                samples=1000, seed=0, integrator=None) -> Descent:
    """Build p^{Gbar->G/H}, p^{G/H->Gbar/Hbar}, p^{Gbar->Gbar/Hbar} for N < H < G."""
    G, N = Q.group, Q.subgroup
    rng = np.random.default_rng(seed)
    if N.sub.dim:
        n_in_g = N.include_points(random_elements(N.sub, rng, samples))
        back = H.include_points(H.restrict_points(n_in_g))
        if not _close(back, n_in_g, 1e-9):
            raise SubgroupError("chain violated: N must be contained in H")
    if not set(Q.fiber) <= set(split_H.fiber):
        raise SubgroupError("incompatible coordinate splits: N-fiber must lie inside the H-fiber")
    GH = CosetSpace(H, split_H, samples=samples, seed=seed)
    n_in_h = nested_embedding(N, H)
    QH = QuotientPresentation(n_in_h, split_NH, integrator=integrator, samples=samples, seed=seed)
    Gbar, Hbar = Q.raw, QH.raw

    def inc(hb):
        return Q.project_components(H.include(QH.section_components(list(hb))))

    def res(gb):
        return QH.project_components(H.restrict(Q.section_components(list(gb))))

    hbar_in_gbar = SubgroupEmbedding(Hbar, Gbar, inc, res, Hbar.name)
    base_n = list(Q.base)
    split_bar = Split(tuple(base_n.index(i) for i in split_H.base),
                      tuple(base_n.index(i) for i in split_H.fiber if i not in Q.fiber))
    GbarHbar = CosetSpace(hbar_in_gbar, split_bar, name=f"{Gbar.name}/{Hbar.name}", samples=samples, seed=seed)

    p_G_GH = GH.projection
    p_G_Gbar = make_projection(f"p[{G.name}->{Gbar.name}]", G, Gbar, Q.project)
    p_Gbar_GH = make_projection(f"p[{Gbar.name}->{GH.name}]", Gbar, GH,
                                lambda x: GH.project(Q.section(x)), rng=rng)
    p_GH_GbarHbar = make_projection(f"p[{GH.name}->{GbarHbar.name}]", GH, GbarHbar,
                                    lambda b: GbarHbar.project(Q.project(GH.section(b))), rng=rng)
    p_Gbar_GbarHbar = make_projection(f"p[{Gbar.name}->{GbarHbar.name}]", Gbar, GbarHbar, GbarHbar.project)
    d = Descent(GH, Q, QH, hbar_in_gbar, GbarHbar, p_G_GH, p_G_Gbar, p_Gbar_GH, p_GH_GbarHbar, p_Gbar_GbarHbar)
    check_descent(d, rng, samples)
    return d


def check_descent(d: Descent, rng, n=1000, tol=1e-9):
    """Representative independence and commutativity of the square of canonical maps."""
    G = d.Q.group
    g = random_elements(G, rng, n)
    b = d.GH.project(g)
    if d.GH.subgroup.sub.dim:
        h = d.GH.subgroup.include_points(random_elements(d.GH.subgroup.sub, rng, n))
        moved = d.GbarHbar.project(d.Q.project(multiply(G, d.GH.section(b), h)))
        if not _close(moved, d.p_GH_GbarHbar(b), tol):
            raise SubgroupError("p^{G/H -> Gbar/Hbar} depends on the coset representative")
    lhs = d.p_Gbar_GbarHbar(d.p_G_Gbar(g))
    rhs = d.p_GH_GbarHbar(d.p_G_GH(g))
    if not _close(lhs, rhs, tol):
        raise SubgroupError("square of canonical maps does not commute")
    if not _close(d.p_Gbar_GH(d.p_G_Gbar(g)), d.p_G_GH(g), tol):
        raise SubgroupError("p^{G->G/H} does not factor through Gbar")
    return True

