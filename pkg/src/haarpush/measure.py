"""Test functions, densities mu = phi(g) dg, properness certificates and pairings.

Supports are tracked as coordinate boxes.  A density is either compactly
supported in a box, or has compact support only along a subset of coordinates
("product form"); a certificate for the quotient map ``G -> G/H`` exists when
every fiber coordinate of the split is one of the compact ones.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import CertificateError, DomainError, IntegrationError
from .groups import GroupChart, haar_density, inverse, multiply
from .integrate import IntegralResult, Integrator, integrate_box


def bump_profile(t):
    """(1 - t^2)^3 on [-1, 1], zero outside (C^2)."""
    t = np.asarray(t, dtype=float)
    return np.where(np.abs(t) < 1.0, (1.0 - t * t) ** 3, 0.0)


def _box_tuple(box):
    return tuple((float(lo), float(hi)) for lo, hi in np.asarray(box, dtype=float).reshape(-1, 2))


@dataclass(frozen=True)
class TestFunction:
    """Continuous function on a coordinate space, vanishing outside ``box``."""

    __test__ = False  # not a pytest class

    fn: Callable
    box: tuple
    breaks: tuple = ()
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "box", _box_tuple(self.box))
        if not self.breaks:
            object.__setattr__(self, "breaks", tuple(
                tuple(b for b in (lo, hi) if np.isfinite(b)) for lo, hi in self.box))

    @property
    def dim(self):
        return len(self.box)

    @property
    def is_compact(self):
        return bool(np.all(np.isfinite(np.asarray(self.box))))

    def __call__(self, pts):
        pts = np.asarray(pts, dtype=float)
        return np.asarray(self.fn(pts.reshape(-1, self.dim))).reshape(pts.shape[:-1])

    def scaled(self, c):
        fn = self.fn
        return TestFunction(lambda p: c * fn(p), self.box, self.breaks, f"{c}*{self.label}")


def bump(center, radius, amplitude=1.0):
    """Tensor bump  A * prod_i b((x_i - c_i) / r_i)  supported on the box c +- r."""
    c = np.asarray(center, dtype=float)
    r = np.asarray(radius, dtype=float)
    if c.shape != r.shape or np.any(r <= 0):
        raise ValueError("bump needs matching center/radius with positive radii")
    amp = complex(amplitude) if np.iscomplexobj(amplitude) else float(amplitude)

    def fn(p):
        return amp * np.prod(bump_profile((p - c) / r), axis=-1)

    box = np.stack([c - r, c + r], axis=-1)
    return TestFunction(fn, box, label=f"bump(c={c.tolist()}, r={r.tolist()}, A={amplitude})")


def constant(dim, value=1.0):
    return TestFunction(lambda p: np.full(p.shape[0], value), [(-np.inf, np.inf)] * dim,
                        label=f"constant({value})")


def tensor(dim, parts):
    """Combine functions of disjoint coordinate subsets: ``parts = [(coords, f), ...]``."""
    box = np.array([(-np.inf, np.inf)] * dim, dtype=float)
    breaks = [()] * dim
    used = []
    for coords, f in parts:
        coords = tuple(coords)
        if len(coords) != f.dim:
            raise ValueError("coordinate list does not match factor dimension")
        for k, i in enumerate(coords):
            box[i] = f.box[k]
            breaks[i] = f.breaks[k]
        used.extend(coords)
    if len(set(used)) != len(used):
        raise ValueError("factors must use disjoint coordinates")

    def fn(p):
        out = np.ones(p.shape[0])
        for coords, f in parts:
            out = out * f.fn(p[:, list(coords)])
        return out

    label = " * ".join(f"{f.label}@{list(c)}" for c, f in parts)
    return TestFunction(fn, box, tuple(breaks), label)


def vanishes_outside(f: TestFunction, rng, n=200, tol=1e-12):
    """Sample just outside each finite face of the box and confirm |f| <= tol."""
    box = np.asarray(f.box)
    lo = np.where(np.isfinite(box[:, 0]), box[:, 0], -5.0)
    hi = np.where(np.isfinite(box[:, 1]), box[:, 1], 5.0)
    worst = 0.0
    for i in range(f.dim):
        for side in (0, 1):
            if not np.isfinite(box[i, side]):
                continue
            p = lo + (hi - lo) * rng.uniform(size=(n, f.dim))
            width = hi[i] - lo[i]
            p[:, i] = box[i, side] + (1 if side else -1) * width * rng.uniform(0, 0.5, n)
            worst = max(worst, float(np.max(np.abs(f(p)))))
    return worst <= tol


# ---------------------------------------------------------------- densities


@dataclass(frozen=True)
class Density:
    """mu = phi(g) dg on ``chart``; ``compact`` lists coordinates with compact support."""

    phi: Callable
    chart: GroupChart
    box: tuple
    compact: tuple
    breaks: tuple = ()
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "box", _box_tuple(self.box))
        object.__setattr__(self, "compact", tuple(sorted(self.compact)))
        if not self.breaks:
            object.__setattr__(self, "breaks", tuple(
                tuple(b for b in (lo, hi) if np.isfinite(b)) for lo, hi in self.box))

    @property
    def shape(self):
        return "compact_box" if len(self.compact) == self.chart.dim else "product_form"

    def __call__(self, pts):
        pts = np.asarray(pts, dtype=float)
        return np.asarray(self.phi(pts.reshape(-1, self.chart.dim))).reshape(pts.shape[:-1])


def _check_box_in_domain(chart, box, coords):
    lo, hi = np.asarray(chart.domain.lower), np.asarray(chart.domain.upper)
    for i in coords:
        a, b = box[i]
        if not (np.isfinite(a) and np.isfinite(b)):
            raise DomainError(f"support of coordinate {i} is not compact")
        if not (a > lo[i] and b < hi[i]):
            raise DomainError(f"support box [{a}, {b}] of coordinate {i} leaves the domain of {chart.name}")


def compact_density(chart: GroupChart, f: TestFunction, label=None) -> Density:
    if f.dim != chart.dim:
        raise ValueError("test function dimension does not match chart")
    box = np.asarray(f.box)
    _check_box_in_domain(chart, box, range(chart.dim))
    return Density(f.fn, chart, box, tuple(range(chart.dim)), f.breaks, label or f.label)


def bump_density(chart: GroupChart, center, radius, amplitude=1.0) -> Density:
    return compact_density(chart, bump(center, radius, amplitude))


def product_density(chart: GroupChart, free_coords, u: TestFunction, compact_coords, v: TestFunction,
                    label=None) -> Density:
    """phi(g) = u(g[free]) * v(g[compact]) with v compactly supported."""
    free_coords, compact_coords = tuple(free_coords), tuple(compact_coords)
    if sorted(free_coords + compact_coords) != list(range(chart.dim)):
        raise ValueError("free and compact coordinates must partition the chart coordinates")
    if not v.is_compact:
        raise DomainError("compact factor must have a bounded support box")
    f = tensor(chart.dim, [(free_coords, u), (compact_coords, v)])
    box = np.asarray(f.box, dtype=float)
    _check_box_in_domain(chart, box, compact_coords)
    for i in free_coords:
        box[i] = (max(box[i][0], chart.domain.lower[i]), min(box[i][1], chart.domain.upper[i]))
    return Density(f.fn, chart, box, compact_coords, f.breaks, label or f"product({f.label})")


def scale_density(mu: Density, c, label=None) -> Density:
    phi = mu.phi
    return Density(lambda p: c * phi(p), mu.chart, mu.box, mu.compact, mu.breaks, label or f"{c}*{mu.label}")


def add_densities(mu1: Density, mu2: Density) -> Density:
    if mu1.chart.name != mu2.chart.name:
        raise ValueError("densities live on different charts")
    b1, b2 = np.asarray(mu1.box), np.asarray(mu2.box)
    box = np.stack([np.minimum(b1[:, 0], b2[:, 0]), np.maximum(b1[:, 1], b2[:, 1])], -1)
    compact = tuple(sorted(set(mu1.compact) & set(mu2.compact)))
    breaks = tuple(tuple(sorted(set(a) | set(b))) for a, b in zip(mu1.breaks, mu2.breaks))
    p1, p2 = mu1.phi, mu2.phi
    return Density(lambda p: p1(p) + p2(p), mu1.chart, box, compact, breaks, f"{mu1.label}+{mu2.label}")


def right_translate(mu: Density, h, rng=None) -> Density:
    """The density g -> phi(g h) (compactly supported mu only).

    Its support is supp(phi) h^-1; the box is the bounding box of the translated
    corners, which is exact for charts where right translation is affine in the
    coordinates (all catalog charts).  Interior samples guard the assumption.
    """
    if mu.shape != "compact_box":
        raise CertificateError("right translation is implemented for compactly supported densities")
    G = mu.chart
    h = np.asarray(h, dtype=float)
    hinv = inverse(G, h)
    box = np.asarray(mu.box)
    corners = np.array(np.meshgrid(*box, indexing="ij")).reshape(G.dim, -1).T
    img = multiply(G, corners, hinv)
    lo, hi = img.min(axis=0), img.max(axis=0)
    rng = rng or np.random.default_rng(0)
    inner = box[:, 0] + (box[:, 1] - box[:, 0]) * rng.uniform(size=(512, G.dim))
    inner_img = multiply(G, inner, hinv)
    slack = 1e-9 * (1.0 + np.abs(hi - lo))
    if np.any(inner_img < lo - slack) or np.any(inner_img > hi + slack):
        pad = 0.05 * (hi - lo)
        lo = np.minimum(lo, inner_img.min(axis=0)) - pad
        hi = np.maximum(hi, inner_img.max(axis=0)) + pad
    new_box = np.stack([lo, hi], axis=-1)
    _check_box_in_domain(G, new_box, range(G.dim))
    phi = mu.phi

    def shifted(p):
        return phi(multiply(G, p, h))

    return Density(shifted, G, new_box, tuple(range(G.dim)), label=f"{mu.label}(. h), h={h.tolist()}")


# ---------------------------------------------------------------- certificates


@dataclass(frozen=True)
class PropernessCert:
    """Evidence that p|supp(mu) is proper for the projection of ``space``."""

    space: object = field(repr=False)
    kind: str
    density: str = ""

    def describe(self):
        return f"{self.kind} for {getattr(self.space, 'name', self.space)}"


def check_membership(mu: Density, space) -> PropernessCert:
    """Certify mu in M_H(G) for the coset space ``space = G/H`` (or refuse)."""
    if space.group.name != mu.chart.name or space.group.dim != mu.chart.dim:
        raise CertificateError(f"density lives on {mu.chart.name}, space is a quotient of {space.group.name}")
    if mu.shape == "compact_box":
        return PropernessCert(space, "compact_support", mu.label)
    missing = set(space.fiber) - set(mu.compact)
    if missing:
        raise CertificateError(
            f"not certifiably in M_H(G): support is non-compact along fiber coordinates {sorted(missing)} of {space.name}")
    return PropernessCert(space, "product_form_compact_fiber", mu.label)


def inclusion_check_MH_in_MN(mu: Density, cert: PropernessCert, n_space) -> PropernessCert:
    """M_H(G) is contained in M_N(G) for N inside H: nested splits carry the certificate over."""
    if not set(n_space.fiber) <= set(cert.space.fiber):
        raise CertificateError("incompatible coordinate splits: N-fiber not inside H-fiber")
    if n_space.group.name != cert.space.group.name:
        raise CertificateError("certificates refer to different groups")
    if cert.kind == "compact_support":
        return PropernessCert(n_space, "compact_support", mu.label)
    return PropernessCert(n_space, "product_form_compact_fiber", mu.label)


# ---------------------------------------------------------------- pairing


def effective_box(mu: Density, f: TestFunction):
    b1, b2 = np.asarray(mu.box), np.asarray(f.box)
    box = np.stack([np.maximum(b1[:, 0], b2[:, 0]), np.minimum(b1[:, 1], b2[:, 1])], -1)
    if not np.all(np.isfinite(box)):
        raise IntegrationError("unbounded integrand domain")
    breaks = tuple(tuple(sorted(set(a) | set(b))) for a, b in zip(mu.breaks, f.breaks))
    return box, breaks


def pair(mu: Density, f: TestFunction, integrator: Integrator | None = None) -> IntegralResult:
    """int f(g) phi(g) dg over the effective support box, dg = haar_scale * rho * dlambda."""
    if f.dim != mu.chart.dim:
        raise ValueError("test function dimension does not match density chart")
    box, breaks = effective_box(mu, f)
    if np.any(box[:, 1] <= box[:, 0]):
        return IntegralResult(0.0, 0.0, 0, 0.0)
    G = mu.chart
    scale = G.haar_scale

    def integrand(p):
        return scale * f.fn(p) * mu.phi(p) * haar_density(G, p)

    return integrate_box(integrand, box, integrator, breaks)
