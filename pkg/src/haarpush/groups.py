"""Matrix Lie groups on global coordinate charts.

Coordinates of an element are passed around as numpy arrays of shape ``(dim,)``
or batches of shape ``(..., dim)``.  The chart's own ``mul``/``inv``/``embed``
callables work on *component sequences* (``x[0], x[1], ...``) so the same law
evaluates on floats, arrays and :class:`~haarpush.dual.Dual` numbers.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .dual import Dual, jacobian, value
from .errors import ChartError, DomainError

Components = Sequence


@dataclass(frozen=True)
class Domain:
    """Open coordinate box ``lower < x < upper`` (bounds may be infinite)."""

    lower: tuple
    upper: tuple

    @classmethod
    def unbounded(cls, dim):
        return cls((-np.inf,) * dim, (np.inf,) * dim)

    @classmethod
    def positive(cls, dim, coords):
        lo = [-np.inf] * dim
        for i in coords:
            lo[i] = 0.0
        return cls(tuple(lo), (np.inf,) * dim)

    def contains(self, x):
        x = np.asarray(x, dtype=float)
        lo = np.asarray(self.lower)
        hi = np.asarray(self.upper)
        return np.all((x > lo) & (x < hi), axis=-1)

    def restrict(self, idx):
        return Domain(tuple(self.lower[i] for i in idx), tuple(self.upper[i] for i in idx))

    def describe(self):
        parts = []
        for i, (lo, hi) in enumerate(zip(self.lower, self.upper)):
            if lo == 0.0 and hi == np.inf:
                parts.append(f"coord {i} > 0")
            elif np.isfinite(lo) or np.isfinite(hi):
                parts.append(f"{lo} < coord {i} < {hi}")
        return ", ".join(parts) or "unbounded"


@dataclass(frozen=True)
class GroupChart:
    name: str
    dim: int
    mul: Callable
    inv: Callable
    identity: tuple
    embed: Callable | None = None
    domain: Domain | None = None
    # Scale of the left Haar measure relative to the pinned density (rho(e) = 1);
    # quotient charts carry their Weil scale here.
    haar_scale: float = 1.0
    # Quotient charts of a root group remember which root coordinates they keep.
    root: "GroupChart | None" = field(default=None, compare=False, repr=False)
    lineage: tuple | None = None
    description: str = ""
    # Optional closed form of the pinned left Haar density on point arrays (..., dim);
    # check_chart compares it with the Jacobian route.
    haar: Callable | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.domain is None:
            object.__setattr__(self, "domain", Domain.unbounded(self.dim))
        if len(self.identity) != self.dim:
            raise ChartError(f"{self.name}: identity has wrong length")

    @property
    def root_chart(self):
        return self.root if self.root is not None else self

    @property
    def root_lineage(self):
        return self.lineage if self.lineage is not None else tuple(range(self.dim))

    def with_scale(self, scale):
        return dataclasses.replace(self, haar_scale=float(scale))

    def identity_array(self):
        return np.asarray(self.identity, dtype=float)

    def __str__(self):
        return self.name


def components(x):
    x = np.asarray(x, dtype=float)
    return [x[..., i] for i in range(x.shape[-1])]


def stack(comps, shape=None):
    vals = [np.asarray(value(c), dtype=float) for c in comps]
    if shape is None:
        shape = np.broadcast_shapes(*(v.shape for v in vals)) if vals else ()
    if not vals:
        return np.zeros(shape + (0,))
    return np.stack([np.broadcast_to(v, shape) for v in vals], axis=-1)


def check_domain(G: GroupChart, x):
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != G.dim:
        raise DomainError(f"element outside chart domain: {G.name} expects {G.dim} coordinates")
    ok = G.domain.contains(x)
    if not np.all(ok):
        bad = x[~ok][0] if x.ndim > 1 else x
        raise DomainError(f"element outside chart domain: {G.name} at {np.round(bad, 6).tolist()}")
    return x


def multiply(G: GroupChart, x, y):
    x = check_domain(G, x)
    y = check_domain(G, y)
    shape = np.broadcast_shapes(x.shape[:-1], y.shape[:-1])
    return stack(G.mul(components(x), components(y)), shape)


def inverse(G: GroupChart, x):
    x = check_domain(G, x)
    return stack(G.inv(components(x)), x.shape[:-1])


def _jac_of(fn, at, k):
    seeds = Dual.seed(components(at), k)
    out = fn(seeds)
    shape = np.broadcast_shapes(at.shape[:-1], *(np.shape(value(o)) for o in out))
    return jacobian(out, k, shape)


def translation_jacobian(G: GroupChart, g, side="left", at=None, method="dual"):
    """Jacobian of ``y -> g*y`` (left) or ``y -> y*g`` (right) evaluated at ``at``.

    ``method="dual"`` uses forward-mode dual numbers; ``"fd"`` uses Richardson
    extrapolated central differences; ``"both"`` computes both and raises
    :class:`ChartError` if they disagree by more than 1e-8 relative.
    """
    g = check_domain(G, g)
    at = G.identity_array() if at is None else check_domain(G, at)
    if side not in ("left", "right"):
        raise ValueError(f"side must be 'left' or 'right', got {side!r}")
    if method == "fd":
        return _translation_jacobian_fd(G, g, side, at)
    gc = components(g)
    if side == "left":
        J = _jac_of(lambda y: G.mul(gc, y), at, G.dim)
    else:
        J = _jac_of(lambda y: G.mul(y, gc), at, G.dim)
    J = np.broadcast_to(J, np.broadcast_shapes(g.shape[:-1], at.shape[:-1]) + (G.dim, G.dim))
    if method == "both":
        Jfd = _translation_jacobian_fd(G, g, side, at)
        scale = max(np.max(np.abs(J)), 1.0)
        if np.max(np.abs(J - Jfd)) > 1e-8 * scale:
            raise ChartError(f"{G.name}: dual and finite-difference Jacobians disagree")
    return J


def _translation_jacobian_fd(G, g, side, at, step=1e-3):
    gc = components(g)

    def f(y):
        yc = components(y)
        out = G.mul(gc, yc) if side == "left" else G.mul(yc, gc)
        return stack(out, np.broadcast_shapes(g.shape[:-1], y.shape[:-1]))

    cols = []
    for j in range(G.dim):
        e = np.zeros(G.dim)
        e[j] = 1.0
        h = step
        while True:
            pts = [at + s * h * e for s in (1, -1, 0.5, -0.5)]
            if all(np.all(G.domain.contains(p)) for p in pts):
                break
            h /= 2.0
            if h < 1e-12:
                raise ChartError(f"{G.name}: finite-difference step escapes domain (step < 1e-12)")
        d1 = (f(pts[0]) - f(pts[1])) / (2 * h)
        d2 = (f(pts[2]) - f(pts[3])) / h
        cols.append((4.0 * d2 - d1) / 3.0)
    return np.stack(cols, axis=-1)


def _abs_det(J, G):
    d = np.abs(np.linalg.det(J)) if J.shape[-1] else np.ones(J.shape[:-2])
    if np.any(~np.isfinite(d)) or np.any(d < 1e-300):
        raise ChartError(f"chart degenerate at point ({G.name})")
    return d


def haar_density(G: GroupChart, g, method="auto"):
    """Left Haar density w.r.t. coordinate Lebesgue measure, pinned so rho(e) = 1.

    ``method="auto"`` uses the chart's closed form when it has one,
    ``"jacobian"`` always goes through the left-translation Jacobian.
    """
    if G.haar is not None and method == "auto":
        g = check_domain(G, g)
        return np.broadcast_to(np.asarray(G.haar(g), dtype=float), g.shape[:-1])
    return 1.0 / _abs_det(translation_jacobian(G, g, "left"), G)


def modular_parts(G: GroupChart, h):
    """Return ``(Delta(h), |det dR_h(e)|, |det dL_h(e)|)``."""
    dr = _abs_det(translation_jacobian(G, h, "right"), G)
    dl = _abs_det(translation_jacobian(G, h, "left"), G)
    return dr / dl, dr, dl


def modular(G: GroupChart, h):
    """Modular function with the convention  Delta(h) * int f(g) dg = int f(g h^-1) dg."""
    return modular_parts(G, h)[0]


def random_elements(G: GroupChart, rng, n, scale=1.0):
    """Random chart points: log-normal on positive coordinates, normal elsewhere."""
    lo = np.asarray(G.domain.lower)
    hi = np.asarray(G.domain.upper)
    z = rng.normal(size=(n, G.dim)) * scale
    x = np.where(lo == 0.0, np.exp(0.5 * z), z)
    bounded = np.isfinite(lo) & np.isfinite(hi)
    if np.any(bounded):
        u = rng.uniform(size=(n, G.dim))
        x = np.where(bounded, lo + (hi - lo) * (0.05 + 0.9 * u), x)
    return x


def check_chart(G: GroupChart, rng, n=200, tol=1e-10):
    """Assert the group-law invariants on random samples; returns max deviations."""
    x, y, z = (random_elements(G, rng, n) for _ in range(3))
    e = np.broadcast_to(G.identity_array(), x.shape)
    scale = 1.0 + np.abs(x)
    dev = {
        "left_identity": np.max(np.abs(multiply(G, e, x) - x) / scale),
        "right_identity": np.max(np.abs(multiply(G, x, e) - x) / scale),
        "inverse": np.max(np.abs(multiply(G, x, inverse(G, x)) - e)),
    }
    lhs = multiply(G, multiply(G, x, y), z)
    rhs = multiply(G, x, multiply(G, y, z))
    dev["associativity"] = np.max(np.abs(lhs - rhs) / (1.0 + np.abs(lhs)))
    if G.embed is not None:
        E = lambda p: np.asarray(_embed(G, p))
        dev["homomorphism"] = np.max(np.abs(E(multiply(G, x, y)) - E(x) @ E(y)) / (1.0 + np.abs(E(x) @ E(y))))
    if G.haar is not None:
        closed = haar_density(G, x)
        generic = haar_density(G, x, method="jacobian")
        dev["haar_closed_form"] = np.max(np.abs(closed / generic - 1.0))
    limits = {"associativity": 1e-9}
    for key, d in dev.items():
        if not d <= limits.get(key, tol):
            raise ChartError(f"{G.name}: {key} invariant violated (deviation {d:.3e})")
    return dev


def _embed(G, x):
    rows = G.embed(components(x))
    shape = np.asarray(x).shape[:-1]
    return np.stack([np.stack([np.broadcast_to(np.asarray(v, float), shape) for v in r], -1) for r in rows], -2)


def embed(G: GroupChart, x):
    """Matrix of an element (``(..., n, n)``)."""
    if G.embed is None:
        raise ChartError(f"{G.name} has no matrix embedding")
    return _embed(G, check_domain(G, x))


# ---------------------------------------------------------------- catalog


def euclidean(n: int) -> GroupChart:
    def mul(x, y):
        return tuple(a + b for a, b in zip(x, y))

    def inv(x):
        return tuple(-a for a in x)

    def emb(x):
        rows = [[1.0 if i == j else 0.0 for j in range(n)] + [x[i]] for i in range(n)]
        return rows + [[0.0] * n + [1.0]]

    return GroupChart(f"R^n:{n}", n, mul, inv, (0.0,) * n, emb, description="additive group R^n",
                      haar=_unit_density)


def _unit_density(g):
    return np.ones(g.shape[:-1])


def _aff_mul(x, y):
    return (x[0] * y[0], x[0] * y[1] + x[1])


def _aff_inv(x):
    return (1.0 / x[0], -x[1] / x[0])


def aff1() -> GroupChart:
    return GroupChart(
        "aff1",
        2,
        _aff_mul,
        _aff_inv,
        (1.0, 0.0),
        lambda x: [[x[0], x[1]], [0.0, 1.0]],
        Domain.positive(2, [0]),
        description="affine group of the line, (a, b) ~ [[a, b], [0, 1]], a > 0",
        haar=lambda g: 1.0 / g[..., 0] ** 2,
    )


def _heis_mul(x, y):
    return (x[0] + y[0], x[1] + y[1], x[2] + y[2] + x[0] * y[1])


def _heis_inv(x):
    return (-x[0], -x[1], x[0] * x[1] - x[2])


def heis3() -> GroupChart:
    return GroupChart(
        "heis3",
        3,
        _heis_mul,
        _heis_inv,
        (0.0, 0.0, 0.0),
        lambda x: [[1.0, x[0], x[2]], [0.0, 1.0, x[1]], [0.0, 0.0, 1.0]],
        description="Heisenberg group, (x, y, z) ~ [[1, x, z], [0, 1, y], [0, 0, 1]]",
        haar=_unit_density,
    )


def _borel_mul(x, y):
    a1, a2, a3, u12, u23, u13 = x
    b1, b2, b3, v12, v23, v13 = y
    return (
        a1 * b1,
        a2 * b2,
        a3 * b3,
        a1 * v12 + u12 * b2,
        a2 * v23 + u23 * b3,
        a1 * v13 + u12 * v23 + u13 * b3,
    )


def _borel_inv(x):
    a1, a2, a3, u12, u23, u13 = x
    return (
        1.0 / a1,
        1.0 / a2,
        1.0 / a3,
        -u12 / (a1 * a2),
        -u23 / (a2 * a3),
        (u12 * u23 - u13 * a2) / (a1 * a2 * a3),
    )


def borel3() -> GroupChart:
    return GroupChart(
        "borel3",
        6,
        _borel_mul,
        _borel_inv,
        (1.0, 1.0, 1.0, 0.0, 0.0, 0.0),
        lambda x: [[x[0], x[3], x[5]], [0.0, x[1], x[4]], [0.0, 0.0, x[2]]],
        Domain.positive(6, [0, 1, 2]),
        description="upper-triangular 3x3 with positive diagonal, coords (a1, a2, a3, u12, u23, u13)",
        haar=lambda g: 1.0 / (g[..., 0] ** 3 * g[..., 1] ** 2 * g[..., 2]),
    )


def direct_product(G1: GroupChart, G2: GroupChart) -> GroupChart:
    d1 = G1.dim

    def mul(x, y):
        return tuple(G1.mul(x[:d1], y[:d1])) + tuple(G2.mul(x[d1:], y[d1:]))

    def inv(x):
        return tuple(G1.inv(x[:d1])) + tuple(G2.inv(x[d1:]))

    def block_embed(x):
        A, B = G1.embed(x[:d1]), G2.embed(x[d1:])
        n1, n2 = len(A), len(B)
        rows = [list(r) + [0.0] * n2 for r in A]
        return rows + [[0.0] * n1 + list(r) for r in B]

    emb = block_embed if G1.embed is not None and G2.embed is not None else None

    def product_haar(g):
        return G1.haar(g[..., :d1]) * G2.haar(g[..., d1:])

    dom = Domain(G1.domain.lower + G2.domain.lower, G1.domain.upper + G2.domain.upper)
    haar = product_haar if G1.haar is not None and G2.haar is not None else None
    return GroupChart(f"{G1.name}x{G2.name}", d1 + G2.dim, mul, inv, G1.identity + G2.identity, emb, dom,
                      description=f"direct product {G1.name} x {G2.name}", haar=haar)


def by_name(name: str) -> GroupChart:
    """Resolve a catalog group name such as ``"aff1"`` or ``"R^n:3"``."""
    if "*" in name:
        parts = [by_name(p.strip()) for p in name.split("*")]
        G = parts[0]
        for P in parts[1:]:
            G = direct_product(G, P)
        return G
    if name.startswith("R^n:"):
        try:
            n = int(name[4:])
        except ValueError:
            raise KeyError(name) from None
        if n < 1:
            raise KeyError(name)
        return euclidean(n)
    table = {"aff1": aff1, "heis3": heis3, "borel3": borel3}
    if name not in table:
        raise KeyError(name)
    return table[name]()


CATALOG_GROUPS = ("R^n:<n>", "aff1", "heis3", "borel3")
