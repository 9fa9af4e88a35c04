"""Pushforward measures along canonical projections.

The weak form (pairing against test functions on the target) is the primitive;
for normal quotients the density form  p_*(phi dg) = (int_N phi(g n) dn) dgbar
is also available.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CertificateError
from .measure import Density, PropernessCert, TestFunction, check_membership, pair
from .quotient import CosetSpace, Projection, QuotientPresentation, identity_projection


@dataclass(frozen=True)
class PushforwardHandle:
    source: Density
    cert: PropernessCert
    route: tuple
    density: Density | None = None

    def __post_init__(self):
        for a, b in zip(self.route[:-1], self.route[1:]):
            if a.target.name != b.source.name:
                raise CertificateError(f"route steps do not compose: {a.name} then {b.name}")


def pull_back(alpha: TestFunction, route: Projection) -> TestFunction:
    """alpha o route, with its support box pulled back through the coordinate pick."""
    if alpha.dim != route.target.dim:
        raise ValueError(f"test function has {alpha.dim} coordinates, {route.target.name} has {route.target.dim}")
    d = route.source.dim
    box = np.array([(-np.inf, np.inf)] * d, dtype=float)
    breaks = [()] * d
    for i, pos in enumerate(route.positions):
        box[pos] = alpha.box[i]
        breaks[pos] = alpha.breaks[i]
    fn, rmap = alpha.fn, route.fn
    return TestFunction(lambda p: fn(rmap(p)), box, tuple(breaks), f"{alpha.label} o {route.name}")


def _check_route(mu: Density, cert: PropernessCert | None, route: Projection):
    if route.source.name != mu.chart.name:
        raise CertificateError(f"route starts at {route.source.name}, density lives on {mu.chart.name}")
    collapsed = set(range(mu.chart.dim)) - set(route.positions)
    if not collapsed:
        return
    if cert is None or cert.space.group.name != mu.chart.name or not collapsed <= set(cert.space.fiber):
        raise CertificateError("mu not certifiably in M(p, X1) for this route")


def pushforward_pair(mu: Density, cert: PropernessCert | None, route: Projection, alpha: TestFunction,
                     integrator=None):
    """int alpha d p_*(mu) := int (alpha o p) dmu."""
    _check_route(mu, cert, route)
    return pair(mu, pull_back(alpha, route), integrator)


def pushforward_density(mu: Density, cert: PropernessCert, Q: QuotientPresentation, integrator=None) -> Density:
    """Density of p_*^{G->G/N}(mu) w.r.t. the Weil-normalized Haar measure of G/N."""
    if cert.space.group.name != mu.chart.name:
        raise CertificateError("certificate belongs to another group")
    if not set(Q.fiber) <= set(cert.space.fiber) or not set(Q.fiber) <= set(mu.compact):
        raise CertificateError("mu not certifiably in M_N(G)")
    integrator = integrator or Q.integrator
    base, fiber = list(Q.base), list(Q.fiber)
    box = np.asarray(mu.box)
    f_box = box[fiber]
    f_breaks = [mu.breaks[i] for i in fiber]

    def psi(b):
        return Q.fiber_integrate(b, lambda g, n: mu(g), f_box, f_breaks, integrator)

    compact = tuple(k for k, i in enumerate(base) if i in mu.compact)
    return Density(psi, Q.quotient, box[base], compact, tuple(mu.breaks[i] for i in base),
                   f"p_*[{Q.name}]({mu.label})")


def membership_after_pushforward(psi: Density, space: CosetSpace) -> PropernessCert:
    """Certificate that p_*^{G->Gbar}(mu) lies in M_{Hbar}(Gbar)."""
    return check_membership(psi, space)


def unique_rows(fn, pts):
    """Evaluate ``fn`` once per distinct row of ``pts`` (tensor grids repeat base points)."""
    pts = np.asarray(pts, dtype=float)
    if len(pts) < 2:
        return fn(pts)
    u, inv = np.unique(pts, axis=0, return_inverse=True)
    if len(u) == len(pts):
        return fn(pts)
    return np.asarray(fn(u))[inv.reshape(-1)]


def build_fiber_average(nu: TestFunction, space: CosetSpace, integrator=None) -> TestFunction:
    """alpha(gH) = int_H nu(g h) dh as a test function on G/H."""
    if not nu.is_compact:
        raise CertificateError("fiber average needs a compactly supported function")
    if nu.dim != space.group.dim:
        raise ValueError("test function does not live on the group of this coset space")
    base, fiber = list(space.base), list(space.fiber)
    box = np.asarray(nu.box)
    f_box = box[fiber]
    f_breaks = [nu.breaks[i] for i in fiber]

    def average(b):
        return space.fiber_integrate(b, lambda g, n: nu(g), f_box, f_breaks, integrator)

    def alpha(b):
        return unique_rows(average, b)

    return TestFunction(alpha, box[base], tuple(nu.breaks[i] for i in base), f"avg[{space.name}]({nu.label})")


def handle(mu: Density, cert: PropernessCert, *route: Projection) -> PushforwardHandle:
    route = route or (identity_projection(mu.chart),)
    return PushforwardHandle(mu, cert, tuple(route))
