"""Tensor Gauss-Legendre quadrature and seeded Monte Carlo over coordinate boxes."""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import IntegrationError


@dataclass(frozen=True)
class Integrator:
    kind: str = "gauss"
    order: int = 8
    panels: int = 1
    samples: int = 200_000
    seed: int = 0
    error_estimate: bool = True
    chunk: int = 250_000

    def __post_init__(self):
        if self.kind not in ("gauss", "monte_carlo"):
            raise ValueError(f"unknown integrator kind {self.kind!r}")
        if self.order < 2:
            raise ValueError("quadrature order must be >= 2")
        if self.panels < 1:
            raise ValueError("panels must be >= 1")
        if self.samples < 1000:
            raise ValueError("Monte Carlo needs at least 1000 samples")

    def refined(self):
        return dataclasses.replace(self, order=self.order + 2)

    def doubled(self):
        return dataclasses.replace(self, order=2 * self.order, samples=4 * self.samples)

    def as_gauss(self):
        """Rule used for inner (fiber) integrals, which are always quadratures."""
        return dataclasses.replace(self, kind="gauss")

    def describe(self):
        if self.kind == "gauss":
            return {"kind": "gauss", "order": self.order, "panels": self.panels}
        return {"kind": "monte_carlo", "samples": self.samples, "seed": self.seed}


@dataclass(frozen=True)
class IntegralResult:
    value: complex
    error_estimate: float
    evaluations: int
    # integral of |f|, used to decide when a value is numerically zero
    magnitude: float = 0.0

    def __float__(self):
        return float(np.real(self.value))


@lru_cache(maxsize=None)
def _leggauss(n):
    x, w = np.polynomial.legendre.leggauss(n)
    x.flags.writeable = False
    w.flags.writeable = False
    return x, w


def axis_rule(lo, hi, order, panels=1, breaks=()):
    """Composite Gauss-Legendre rule on ``[lo, hi]``; panel edges include interior ``breaks``."""
    edges = set(np.linspace(lo, hi, panels + 1).tolist())
    tol = 1e-12 * max(1.0, abs(hi - lo))
    for b in breaks:
        if lo + tol < b < hi - tol:
            edges.add(float(b))
    edges = sorted(edges)
    merged = [edges[0]]
    for e in edges[1:]:
        if e - merged[-1] > tol:
            merged.append(e)
    merged[-1] = hi
    x, w = _leggauss(order)
    nodes, weights = [], []
    for a, b in zip(merged[:-1], merged[1:]):
        nodes.append(0.5 * (b - a) * x + 0.5 * (a + b))
        weights.append(0.5 * (b - a) * w)
    return np.concatenate(nodes), np.concatenate(weights)


def _as_box(box):
    box = np.asarray(box, dtype=float).reshape(-1, 2)
    if not np.all(np.isfinite(box)):
        raise IntegrationError("unbounded integrand domain")
    return box


def _breaks_for(breaks, d):
    if breaks is None:
        return [()] * d
    if len(breaks) != d:
        raise ValueError("breaks must list one sequence per axis")
    return [tuple(b) for b in breaks]


def tensor_rule(box, order, panels=1, breaks=None):
    """Per-axis rules ``[(nodes, weights), ...]`` of the tensor product."""
    box = _as_box(box)
    br = _breaks_for(breaks, len(box))
    return [axis_rule(lo, hi, order, panels, b) for (lo, hi), b in zip(box, br)]


def tensor_nodes(rules):
    """Full node/weight arrays of a (small) tensor rule."""
    if not rules:
        return np.zeros((1, 0)), np.ones(1)
    grids = np.meshgrid(*[r[0] for r in rules], indexing="ij")
    wgrid = np.meshgrid(*[r[1] for r in rules], indexing="ij")
    nodes = np.stack([g.ravel() for g in grids], axis=-1)
    weights = np.prod(np.stack([w.ravel() for w in wgrid], axis=-1), axis=-1)
    return nodes, weights


def _check_finite(vals, pts):
    bad = ~np.isfinite(vals)
    if np.any(bad):
        node = pts[np.argmax(bad)]
        raise IntegrationError(f"integrand not finite at node {np.round(node, 8).tolist()}")


def _gauss(f, box, order, panels, breaks, chunk):
    rules = tensor_rule(box, order, panels, breaks)
    sizes = [len(r[0]) for r in rules]
    total = int(np.prod(sizes)) if sizes else 1
    acc = 0.0
    mag = 0.0
    for start in range(0, total, chunk):
        idx = np.unravel_index(np.arange(start, min(total, start + chunk)), sizes) if sizes else ()
        if sizes:
            pts = np.stack([r[0][i] for r, i in zip(rules, idx)], axis=-1)
            w = np.prod(np.stack([r[1][i] for r, i in zip(rules, idx)], axis=-1), axis=-1)
        else:
            pts, w = np.zeros((1, 0)), np.ones(1)
        vals = np.asarray(f(pts))
        _check_finite(vals, pts)
        acc = acc + np.sum(w * vals)
        mag += float(np.sum(w * np.abs(vals)))
    return acc, mag, total


def integrate_box(f, box, integrator: Integrator | None = None, breaks=None) -> IntegralResult:
    """Integrate ``f`` (vectorized: ``(M, d) -> (M,)``) over a finite coordinate box.

    Gauss: tensor Gauss-Legendre with ``panels`` panels per axis, split further at
    ``breaks`` (kinks of the integrand); error estimate is the change when the
    order is lowered by two.  Monte Carlo: uniform samples from a Philox stream
    keyed by ``seed``; error estimate is the standard error.
    """
    integrator = integrator or Integrator()
    box = _as_box(box)
    if integrator.kind == "gauss":
        v, mag, n = _gauss(f, box, integrator.order, integrator.panels, breaks, integrator.chunk)
        err = 0.0
        if integrator.error_estimate:
            # the lower-order rule gives a conservative estimate at a fraction of the cost
            other = integrator.order - 2 if integrator.order >= 4 else integrator.order + 2
            v2, _, n2 = _gauss(f, box, other, integrator.panels, breaks, integrator.chunk)
            err = float(abs(v2 - v))
            n += n2
        return IntegralResult(complex(v) if np.iscomplexobj(v) else float(v), err, n, mag)
    return _monte_carlo(f, box, integrator)


def _monte_carlo(f, box, integrator):
    gen = np.random.Generator(np.random.Philox(key=integrator.seed))
    lo, hi = box[:, 0], box[:, 1]
    vol = float(np.prod(hi - lo))
    n = integrator.samples
    s1 = 0.0
    s2 = 0.0
    mag = 0.0
    for start in range(0, n, integrator.chunk):
        m = min(integrator.chunk, n - start)
        pts = lo + (hi - lo) * gen.random((m, len(box)))
        vals = np.asarray(f(pts))
        _check_finite(vals, pts)
        s1 = s1 + np.sum(vals)
        s2 += float(np.sum(np.abs(vals) ** 2))
        mag += float(np.sum(np.abs(vals)))
    mean = s1 / n
    var = max(s2 / n - abs(mean) ** 2, 0.0)
    stderr = vol * np.sqrt(var / (n - 1))
    v = vol * mean
    return IntegralResult(complex(v) if np.iscomplexobj(v) else float(v), float(stderr), n, vol * mag / n)
