"""Checks of the pushforward identities, each producing a VerificationReport.

Measure equalities are tested weakly: both sides are paired against a small
family of bump test functions (one deterministic, the rest random).  Finite
chains are checked with exact rational arithmetic.
"""
from __future__ import annotations

import hashlib
import json
import time
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction

import numpy as np

from . import finite as fin
from .chains import FinChain, LieChain
from .errors import CertificateError, HaarPushError
from .groups import check_chart, haar_density, modular, random_elements
from .integrate import IntegralResult, Integrator, integrate_box
from .measure import (bump, check_membership, compact_density, constant, inclusion_check_MH_in_MN, pair,
                      right_translate)
from .pushforward import (build_fiber_average, membership_after_pushforward, pull_back, pushforward_density,
                          pushforward_pair, unique_rows)
from .quotient import check_descent, check_embedding, compose, fiber_sum_integral

CHECKS = ("main1", "main2", "main3", "main4", "quotient_pushforward", "modular", "right_translation", "weil",
          "normal_restriction", "compose", "invariants")

DEFAULT_REL_TOL = 1e-5
DEFAULT_ABS_FLOOR = 1e-12


@dataclass
class ChainConfig:
    """A chain plus the numerical settings used to check it."""

    chain: object
    integrator: Integrator | None = None
    rel_tol: float | None = None
    abs_floor: float = DEFAULT_ABS_FLOOR
    n_random: int = 5
    seed: int = 0
    measures: int = 200

    def __post_init__(self):
        if self.rel_tol is not None and not self.rel_tol > 0:
            raise ValueError("rel_tol must be positive")
        if not self.abs_floor > 0:
            raise ValueError("abs_floor must be positive")
        if isinstance(self.chain, LieChain) and self.integrator is not None:
            self.chain = self.chain.with_integrator(self.integrator)

    @property
    def name(self):
        return self.chain.name

    @property
    def is_finite(self):
        return isinstance(self.chain, FinChain)

    def tol(self, check):
        if self.rel_tol is not None:
            return self.rel_tol
        return self.chain.tolerances.get(check, DEFAULT_REL_TOL)

    def integ(self):
        return self.chain.integrator if isinstance(self.chain, LieChain) else None

    def rng(self, check):
        return np.random.default_rng([self.seed, zlib.crc32(f"{self.name}/{check}".encode())])


@dataclass
class VerificationReport:
    check: str
    chain: str
    inputs_digest: str
    lhs: list
    rhs: list
    abs_error: float
    rel_error: float
    rel_tol: float
    abs_floor: float
    passed: bool
    diagnostics: dict = field(default_factory=dict)
    wall_time: float = 0.0

    def to_dict(self):
        d = asdict(self)
        d["lhs"] = [_jsonable(v) for v in self.lhs]
        d["rhs"] = [_jsonable(v) for v in self.rhs]
        for key in ("abs_error", "rel_error"):
            d[key] = float(d[key]) if np.isfinite(d[key]) else None
        d["diagnostics"] = _clean(self.diagnostics)
        return d


def _jsonable(v):
    if isinstance(v, (fin.ComplexRational, Fraction)):
        return str(v)
    if isinstance(v, str):
        return v
    c = complex(v)
    return {"re": float(c.real), "im": float(c.imag)}


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        return float(obj) if np.isfinite(obj) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": float(obj.real), "im": float(obj.imag)}
    if isinstance(obj, (fin.ComplexRational, Fraction)):
        return str(obj)
    return obj


def digest(cfg: ChainConfig, check, extra=None):
    payload = {"chain": cfg.name, "check": check, "seed": cfg.seed, "n_random": cfg.n_random,
               "rel_tol": cfg.tol(check), "abs_floor": cfg.abs_floor, "measures": cfg.measures}
    if not cfg.is_finite:
        payload["integrator"] = cfg.chain.integrator.describe()
        payload["densities"] = [mu.label for mu in cfg.chain.densities]
    if extra:
        payload["extra"] = extra
    return hashlib.sha256(json.dumps(payload, sort_keys=True, default=str).encode()).hexdigest()[:16]


def numeric_report(check, cfg, lhs, rhs, magnitude, diagnostics=None, rel_tol=None, abs_floor=None):
    lhs = np.asarray(lhs, dtype=complex)
    rhs = np.asarray(rhs, dtype=complex)
    diff = np.abs(lhs - rhs)
    abs_err = float(np.max(diff, initial=0.0))
    with np.errstate(divide="ignore", invalid="ignore"):
        rel = np.where(diff == 0, 0.0, diff / np.abs(rhs))
    rel_err = float(np.max(rel, initial=0.0))
    rel_tol = cfg.tol(check) if rel_tol is None else rel_tol
    floor = cfg.abs_floor * magnitude if abs_floor is None else abs_floor
    passed = bool(rel_err <= rel_tol or abs_err <= floor)
    return VerificationReport(check, cfg.name, digest(cfg, check), list(lhs), list(rhs), abs_err, rel_err,
                              rel_tol, float(floor), passed, diagnostics or {})


def exact_report(check, cfg, lhs, rhs, diagnostics=None):
    errs = [abs(complex(fin.ComplexRational.of(a) - fin.ComplexRational.of(b))) for a, b in zip(lhs, rhs)]
    rels = [0.0 if e == 0 else e / max(abs(complex(fin.ComplexRational.of(b))), 1e-300) for e, b in zip(errs, rhs)]
    ok = len(lhs) == len(rhs) and all(fin.ComplexRational.of(a) == fin.ComplexRational.of(b) for a, b in zip(lhs, rhs))
    diagnostics = dict(diagnostics or {}, exact=True, count=len(lhs))
    return VerificationReport(check, cfg.name, digest(cfg, check), list(lhs), list(rhs), max(errs, default=0.0),
                              max(rels, default=0.0), 0.0, 0.0, ok, diagnostics)


def status_report(check, cfg, lhs, rhs, failures, diagnostics=None):
    """Reports for certificate and invariant checks: error 1.0 for any failure."""
    err = 1.0 if failures else 0.0
    diagnostics = dict(diagnostics or {})
    if failures:
        diagnostics["failures"] = failures
    return VerificationReport(check, cfg.name, digest(cfg, check), list(lhs), list(rhs), err, err,
                              cfg.tol(check) if not cfg.is_finite else 0.0, 0.0, not failures, diagnostics)


# ---------------------------------------------------------------- test-function families


def reference_box(box, lower, upper):
    """Replace unbounded sides by a window around the identity region."""
    box = np.array(box, dtype=float)
    for i in range(len(box)):
        if not np.all(np.isfinite(box[i])):
            box[i] = (0.5, 1.8) if lower[i] == 0.0 else (-1.0, 1.0)
    return box


def bump_family(ref_box, lower, upper, rng, n_random=5, cover=False):
    """One deterministic bump over ``ref_box`` and ``n_random`` random bumps near it.

    With ``cover`` every bump contains the reference box, so products with the
    measure have no kinks inside the integration box.
    """
    ref = reference_box(ref_box, lower, upper)
    mid, hw = ref.mean(axis=1), 0.5 * (ref[:, 1] - ref[:, 0])
    lower, upper = np.asarray(lower, dtype=float), np.asarray(upper, dtype=float)

    def fit(c, r):
        room = np.minimum(c - lower, upper - c)
        return np.minimum(r, 0.98 * room)

    out = [bump(mid, fit(mid, hw * (1.25 if cover else 1.0)))]
    for _ in range(n_random):
        if cover:
            c = mid + rng.uniform(-0.1, 0.1, len(mid)) * hw
            r = hw * rng.uniform(1.2, 1.5, len(mid))
        else:
            c = mid + rng.uniform(-0.5, 0.5, len(mid)) * hw
            r = hw * rng.uniform(0.5, 1.1, len(mid))
        out.append(bump(c, fit(c, r), rng.uniform(0.5, 1.5)))
    return out


def _family_for(space, box, positions, rng, cfg, cover=None):
    box = np.asarray(box)[list(positions)]
    cover = cfg.chain.cover_tests if cover is None else cover
    return bump_family(box, space.domain.lower, space.domain.upper, rng, cfg.n_random, cover)


def _modular(chart, pts):
    pts = np.asarray(pts, dtype=float)
    if chart.dim == 0:
        return np.ones(pts.shape[:-1])
    return modular(chart, pts)


# ---------------------------------------------------------------- Lie checks


def _certs(chain: LieChain):
    d = chain.descent
    out = []
    for mu in chain.densities:
        cert_H = check_membership(mu, d.GH)
        out.append((mu, cert_H, inclusion_check_MH_in_MN(mu, cert_H, d.Q)))
    return out


def verify_main_item1(cfg: ChainConfig):
    if cfg.is_finite:
        return _fin_main1(cfg)
    chain, d = cfg.chain, cfg.chain.descent
    lhs, rhs, failures, certs = [], [], [], []
    for mu in chain.densities:
        try:
            cert_H = check_membership(mu, d.GH)
            cert_N = inclusion_check_MH_in_MN(mu, cert_H, d.Q)
            lhs.append(cert_N.kind)
            certs.append({"density": mu.label, "M_H": cert_H.kind, "M_N": cert_N.kind})
        except CertificateError as exc:
            lhs.append("refused")
            failures.append(f"{mu.label}: {exc}")
        rhs.append("compact_support" if mu.shape == "compact_box" else "product_form_compact_fiber")
    refused = []
    for mu in chain.refused:
        try:
            check_membership(mu, d.GH)
            failures.append(f"{mu.label}: certified for M_H(G) although its H-fiber support is not compact")
        except CertificateError as exc:
            refused.append({"density": mu.label, "reason": str(exc)})
    return status_report("main1", cfg, lhs, rhs, failures,
                         {"certificates": certs, "refused_as_expected": refused,
                          "scope": "definability is verified for certified density shapes only"})


def verify_main_item2(cfg: ChainConfig):
    if cfg.is_finite:
        return _fin_main23(cfg, "main2")
    chain, d = cfg.chain, cfg.chain.descent
    rng, integ = cfg.rng("main2"), cfg.integ()
    one_shot = compose(d.p_G_Gbar, d.p_Gbar_GH)
    lhs, rhs, mags = [], [], []
    for mu, cert_H, cert_N in _certs(chain):
        psi = pushforward_density(mu, cert_N, d.Q, integ)
        cert_bar = membership_after_pushforward(psi, d.GbarHbar)
        for alpha in _family_for(d.GH, mu.box, d.GH.base, rng, cfg):
            a = pushforward_pair(mu, cert_H, one_shot, alpha, integ)
            b = pushforward_pair(psi, cert_bar, d.p_Gbar_GH, alpha, integ)
            lhs.append(a.value)
            rhs.append(b.value)
            mags.append(max(a.magnitude, b.magnitude))
    return numeric_report("main2", cfg, lhs, rhs, max(mags, default=0.0),
                          {"routes": [one_shot.name, f"{d.p_Gbar_GH.name} after density form"],
                           "integrator": integ.describe()})


def verify_main_item3(cfg: ChainConfig):
    if cfg.is_finite:
        return _fin_main23(cfg, "main3")
    chain, d = cfg.chain, cfg.chain.descent
    rng, integ = cfg.rng("main3"), cfg.integ()
    to_bar = compose(d.p_G_GH, d.p_GH_GbarHbar)
    lhs, rhs, mags = [], [], []
    for mu, cert_H, cert_N in _certs(chain):
        psi = pushforward_density(mu, cert_N, d.Q, integ)
        cert_bar = membership_after_pushforward(psi, d.GbarHbar)
        for alpha in _family_for(d.GbarHbar, mu.box, to_bar.positions, rng, cfg):
            a = pushforward_pair(mu, cert_H, d.p_G_GH, pull_back(alpha, d.p_GH_GbarHbar), integ)
            b = pushforward_pair(psi, cert_bar, d.p_Gbar_GbarHbar, alpha, integ)
            lhs.append(a.value)
            rhs.append(b.value)
            mags.append(max(a.magnitude, b.magnitude))
    return numeric_report("main3", cfg, lhs, rhs, max(mags, default=0.0),
                          {"route_A": f"{d.p_GH_GbarHbar.name} after {d.p_G_GH.name}",
                           "route_B": f"{d.p_Gbar_GbarHbar.name} after density form",
                           "integrator": integ.describe()})


def verify_main_item4(cfg: ChainConfig):
    if cfg.is_finite:
        return _fin_status(cfg, "main4", "image of a finite measure is finitely supported")
    chain, d = cfg.chain, cfg.chain.descent
    lhs, rhs, failures, certs = [], [], [], []
    for mu, cert_H, cert_N in _certs(chain):
        psi = pushforward_density(mu, cert_N, d.Q, cfg.integ())
        try:
            c = membership_after_pushforward(psi, d.GbarHbar)
            lhs.append(c.kind)
            certs.append({"density": psi.label, "M_Hbar": c.kind, "shape": psi.shape})
        except CertificateError as exc:
            lhs.append("refused")
            failures.append(f"{psi.label}: {exc}")
        rhs.append("compact_support" if mu.shape == "compact_box" else "product_form_compact_fiber")
    return status_report("main4", cfg, lhs, rhs, failures, {"certificates": certs})


def quotient_pushforward_rhs(chain: LieChain, phi, nu, integrator):
    """int_G nu(g) [int_H phi(g h) R(h) dh] dg  with  R = Delta_G / Delta_H on H.

    Writing g h = s(b) h' with h' = n(g) h and using that R is a homomorphism,
    the bracket is R(n(g))^-1 I(b) with I(b) = int_H phi(s(b) h') R(h') dh', so
    the inner integral is computed once per distinct base point.
    """
    GH, G = chain.descent.GH, chain.G
    Hs = GH.subgroup.sub
    base, fiber = list(GH.base), list(GH.fiber)
    box = np.asarray(phi.box)
    inner = integrator.as_gauss()

    def R(hpts):
        flat = hpts.reshape(-1, Hs.dim)
        r = _modular(G, GH.subgroup.include_points(flat)) / _modular(Hs, flat)
        return r.reshape(hpts.shape[:-1])

    def I(b):
        return GH.fiber_integrate(b, lambda g, n: phi(g) * R(n), box[fiber], [phi.breaks[i] for i in fiber], inner)

    def outer(g):
        vals = unique_rows(I, g[:, base])
        return nu(g) * vals / R(GH.fiber_element(g)) * haar_density(G, g) * G.haar_scale

    # the inner integral vanishes unless b lies in the base box of supp(phi)
    outer_box = np.array(nu.box, dtype=float)
    for i in base:
        outer_box[i] = (max(outer_box[i][0], box[i][0]), min(outer_box[i][1], box[i][1]))
    if np.any(outer_box[:, 1] <= outer_box[:, 0]):
        return IntegralResult(0.0, 0.0, 0, 0.0)
    return integrate_box(outer, outer_box, integrator, nu.breaks)


def _qp_pairs(cfg: ChainConfig, rng):
    chain = cfg.chain
    G = chain.G
    pairs = [(mu, None) for mu in chain.densities]
    ref = np.asarray(next(mu.box for mu in chain.densities if mu.shape == "compact_box"))
    for f in bump_family(ref, G.domain.lower, G.domain.upper, rng, cfg.n_random)[1:]:
        pairs.append((compact_density(G, f), None))
    out = []
    for mu, _ in pairs:
        mref = reference_box(mu.box, G.domain.lower, G.domain.upper)
        nu = bump_family(mref, G.domain.lower, G.domain.upper, rng, 1, cover=chain.cover_tests)[1]
        out.append((mu, nu))
    return out


def verify_quotient_pushforward(cfg: ChainConfig):
    if cfg.is_finite:
        return _fin_quotient_pushforward(cfg)
    chain, d = cfg.chain, cfg.chain.descent
    rng, integ = cfg.rng("quotient_pushforward"), cfg.integ()
    lhs, rhs, mags = [], [], []
    for phi, nu in _qp_pairs(cfg, rng):
        cert = check_membership(phi, d.GH)
        alpha = build_fiber_average(nu, d.GH, integ)
        a = pushforward_pair(phi, cert, d.p_G_GH, alpha, integ)
        b = quotient_pushforward_rhs(chain, phi, nu, integ)
        lhs.append(a.value)
        rhs.append(b.value)
        mags.append(max(a.magnitude, b.magnitude))
    return numeric_report("quotient_pushforward", cfg, lhs, rhs, max(mags, default=0.0),
                          {"pairs": len(lhs), "integrator": integ.describe()})


def modular_sides(chain: LieChain, h):
    """(L, R) = (Delta_G(h) / Delta_Gbar(hbar), Delta_H(h) / Delta_Hbar(hbar)) for h in H coordinates."""
    d = chain.descent
    h = np.asarray(h, dtype=float).reshape(-1, chain.H.sub.dim)
    hG = chain.H.include_points(h)
    L = _modular(chain.G, hG) / _modular(d.Q.raw, d.Q.project(hG))
    R = _modular(chain.H.sub, h) / _modular(d.QH.raw, d.QH.project(h))
    return L, R


def verify_modular_identity(cfg: ChainConfig, h=None):
    if cfg.is_finite:
        return _fin_modular(cfg)
    chain = cfg.chain
    h = chain.h_grid() if h is None else np.asarray(h, dtype=float)
    L, R = modular_sides(chain, h)
    lhs, rhs = list(L), list(R)
    diag = {"grid": h.tolist(), "L": L.tolist(), "R": R.tolist()}
    if chain.modular_oracle is not None:
        oracle = np.asarray(chain.modular_oracle(h), dtype=float)
        lhs += list(L)
        rhs += list(oracle)
        diag["oracle"] = oracle.tolist()
    return numeric_report("modular", cfg, lhs, rhs, float(np.max(np.abs(rhs), initial=0.0)), diag)


def right_translation_scalar(chain: LieChain, h):
    """Delta_Hbar(hbar') / (Delta_Gbar(hbar') Delta_H(h'))."""
    d = chain.descent
    h = np.asarray(h, dtype=float).reshape(1, -1)
    hG = chain.H.include_points(h)
    num = _modular(d.QH.raw, d.QH.project(h))
    den = _modular(d.Q.raw, d.Q.project(hG)) * _modular(chain.H.sub, h)
    return float((num / den)[0])


def verify_right_translation_scaling(cfg: ChainConfig, h=None):
    """Two reports: the general scaling identity and its N = {e} specialization."""
    if cfg.is_finite:
        return _fin_right_translation(cfg)
    chain, d = cfg.chain, cfg.chain.descent
    rng, integ = cfg.rng("right_translation"), cfg.integ()
    h = np.asarray(chain.right_shift if h is None else h, dtype=float)
    hG = chain.H.include_points(h.reshape(1, -1))[0]
    phi = next(mu for mu in chain.densities if mu.shape == "compact_box")
    phi_h = right_translate(phi, hG)
    c0, c1 = (check_membership(m, d.GH) for m in (phi, phi_h))
    union = np.stack([np.minimum(np.asarray(phi.box)[:, 0], np.asarray(phi_h.box)[:, 0]),
                      np.maximum(np.asarray(phi.box)[:, 1], np.asarray(phi_h.box)[:, 1])], -1)
    scalar = right_translation_scalar(chain, h)
    to_bar = compose(d.p_G_GH, d.p_GH_GbarHbar)
    psi0 = pushforward_density(phi, inclusion_check_MH_in_MN(phi, c0, d.Q), d.Q, integ)
    psi1 = pushforward_density(phi_h, inclusion_check_MH_in_MN(phi_h, c1, d.Q), d.Q, integ)
    b0, b1 = (membership_after_pushforward(p, d.GbarHbar) for p in (psi0, psi1))
    P0, P1, mags = [], [], []
    for alpha in _family_for(d.GbarHbar, union, to_bar.positions, rng, cfg, cover=False):
        a = pushforward_pair(psi0, b0, d.p_Gbar_GbarHbar, alpha, integ)
        b = pushforward_pair(psi1, b1, d.p_Gbar_GbarHbar, alpha, integ)
        P0.append(a.value)
        P1.append(b.value)
        mags.append(max(a.magnitude, b.magnitude))
    mag = max(mags, default=0.0)
    floor = cfg.abs_floor * mag
    informative = [i for i, v in enumerate(P0) if abs(v) > floor]
    lhs = [P1[i] for i in informative]
    rhs = [scalar * P0[i] for i in informative]
    rep = numeric_report("right_translation", cfg, lhs, rhs, mag,
                         {"h": h.tolist(), "scalar": scalar, "informative": len(informative),
                          "skipped_near_zero": len(P0) - len(informative)})
    if len(informative) < 3:
        rep.passed = False
        rep.diagnostics["failures"] = ["fewer than 3 informative test functions"]

    # N = {e}: pushforward to G/H scales by 1 / Delta_G(h')
    dG = float(_modular(chain.G, hG.reshape(1, -1))[0])
    Q0, Q1, mags = [], [], []
    for alpha in _family_for(d.GH, union, d.GH.base, rng, cfg, cover=False):
        a = pushforward_pair(phi, c0, d.p_G_GH, alpha, integ)
        b = pushforward_pair(phi_h, c1, d.p_G_GH, alpha, integ)
        Q0.append(a.value)
        Q1.append(b.value)
        mags.append(max(a.magnitude, b.magnitude))
    mag = max(mags, default=0.0)
    floor = cfg.abs_floor * mag
    keep = [i for i, v in enumerate(Q0) if abs(v) > floor]
    rep0 = numeric_report("right_translation_trivial_n", cfg, [Q1[i] for i in keep], [Q0[i] / dG for i in keep], mag,
                          {"h": h.tolist(), "scalar": 1.0 / dG, "informative": len(keep)},
                          rel_tol=cfg.tol("right_translation_trivial_n"))
    if len(keep) < 3:
        rep0.passed = False
        rep0.diagnostics["failures"] = ["fewer than 3 informative test functions"]
    return [rep, rep0]


def verify_weil(cfg: ChainConfig, betas=None):
    if cfg.is_finite:
        return _fin_weil(cfg)
    chain = cfg.chain
    Q, integ = chain.Q, cfg.integ()
    c, spread = Q.weil
    rng = cfg.rng("weil")
    G = chain.G
    if betas is None:
        betas = []
        for _ in range(3):
            center = G.identity_array() + rng.uniform(-0.2, 0.2, G.dim)
            betas.append(bump(center, rng.uniform(0.3, 0.45, G.dim)))
    lhs, rhs, mags, sig = [], [], [], []
    for beta in betas:
        a = pair(compact_density(G, beta), constant(G.dim), integ)
        b = fiber_sum_integral(Q, beta, integ)
        lhs.append(a.value)
        rhs.append(c * b.value)
        mags.append(max(a.magnitude, c * b.magnitude))
        sig.append(float(np.hypot(a.error_estimate, c * b.error_estimate)))
    diag = {"scale": c, "normalizer_spread": spread, "integrator": integ.describe()}
    floor = None
    if integ.kind == "monte_carlo":
        floor = 3.0 * max(sig)
        diag["three_sigma"] = floor
    return numeric_report("weil", cfg, lhs, rhs, max(mags), diag, abs_floor=floor)


def verify_normal_restriction(cfg: ChainConfig):
    if cfg.is_finite:
        return _fin_normal_restriction(cfg)
    chain = cfg.chain
    Ns = chain.N.sub
    if Ns.dim == 0:
        return numeric_report("normal_restriction", cfg, [], [], 0.0, {"note": "N is trivial"})
    n = random_elements(Ns, cfg.rng("normal_restriction"), 50)
    lhs = _modular(chain.G, chain.N.include_points(n))
    rhs = _modular(Ns, n)
    return numeric_report("normal_restriction", cfg, lhs, rhs, float(np.max(np.abs(rhs))), {"samples": len(n)})


def verify_invariants(cfg: ChainConfig):
    if cfg.is_finite:
        return _fin_invariants(cfg)
    chain = cfg.chain
    rng = cfg.rng("invariants")
    d = chain.descent
    names, failures, dev = [], [], {}
    steps = [
        ("chart " + chain.G.name, lambda: check_chart(chain.G, rng)),
        ("chart " + chain.H.sub.name, lambda: check_chart(chain.H.sub, rng) if chain.H.sub.dim else {}),
        ("chart " + chain.N.sub.name, lambda: check_chart(chain.N.sub, rng) if chain.N.sub.dim else {}),
        ("chart " + d.Q.raw.name, lambda: check_chart(d.Q.raw, rng)),
        ("chart " + d.QH.raw.name, lambda: check_chart(d.QH.raw, rng) if d.QH.raw.dim else {}),
        ("embedding H", lambda: check_embedding(chain.H, rng)),
        ("embedding N", lambda: check_embedding(chain.N, rng)),
        ("embedding Hbar", lambda: check_embedding(d.hbar_in_gbar, rng)),
        ("normality of N", lambda: d.Q.check_normal(rng)),
        ("quotient homomorphism", lambda: d.Q.check_homomorphism(rng)),
        ("split G/H", lambda: d.GH.validate(rng)),
        ("split Gbar/Hbar", lambda: d.GbarHbar.validate(rng)),
        ("canonical square", lambda: check_descent(d, rng)),
    ]
    for name, fn in steps:
        try:
            out = fn()
            if isinstance(out, dict):
                dev[name] = {k: float(v) for k, v in out.items()}
            names.append(name)
        except HaarPushError as exc:
            failures.append(f"{name}: {exc}")
    return status_report("invariants", cfg, ["ok"] * len(names), ["ok"] * len(names), failures,
                         {"checked": names, "deviations": dev})


# ---------------------------------------------------------------- finite backend


@dataclass
class FinTower:
    """All groups, cosets and canonical maps of a finite chain."""

    G: fin.FinGroup
    H: tuple
    N: tuple
    GH: fin.FinCosets
    Gbar: fin.FinGroup
    p_G_Gbar: fin.FinMap
    Hbar: tuple
    GbarHbar: fin.FinCosets
    p_Gbar_GH: fin.FinMap
    p_GH_GbarHbar: fin.FinMap
    Hgrp: fin.FinGroup
    H_incl: fin.FinMap
    Hbar_grp: fin.FinGroup
    p_H_Hbar: fin.FinMap


def fin_tower(chain: FinChain) -> FinTower:
    G, H, N = chain.G, chain.H, chain.N
    GH = fin.fin_cosets(G, H)
    Gbar, p = fin.fin_quotient_group(G, N)
    reps = fin.fin_cosets(G, N).representatives
    Hbar = tuple(sorted({p(h) for h in H}))
    GbarHbar = fin.fin_cosets(Gbar, Hbar)
    p_Gbar_GH = fin.FinMap(Gbar.order, len(GH), [GH.projection(r) for r in reps], "p[Gbar->G/H]")
    assign = []
    for c in GH.cosets:
        images = {GbarHbar.projection(p(g)) for g in c}
        if len(images) != 1:
            raise HaarPushError("p^{G/H -> Gbar/Hbar} depends on the coset representative")
        assign.append(images.pop())
    p_GH_GbarHbar = fin.FinMap(len(GH), len(GbarHbar), assign, "p[G/H->Gbar/Hbar]")
    Hgrp, H_incl = fin.fin_subgroup_group(G, H, f"{G.name}|H")
    N_in_H = [H.index(n) for n in N]
    Hbar_grp, p_H_Hbar = fin.fin_quotient_group(Hgrp, N_in_H, "H/N")
    return FinTower(G, H, N, GH, Gbar, p, Hbar, GbarHbar, p_Gbar_GH, p_GH_GbarHbar, Hgrp, H_incl, Hbar_grp,
                    p_H_Hbar)


def _rand_alpha(n, rng):
    return [fin.ComplexRational(Fraction(int(rng.integers(-5, 6)), int(rng.integers(1, 5))),
                                Fraction(int(rng.integers(-5, 6)), int(rng.integers(1, 5)))) for _ in range(n)]


def _fin_main1(cfg):
    T = fin_tower(cfg.chain)
    rng = cfg.rng("main1")
    lhs = []
    for _ in range(cfg.measures):
        mu = fin.random_measure(T.G.order, rng)
        # every finite measure is in M_H(G) and in M_N(G); supports are finite
        lhs.append("finite_support" if len(mu.support) <= T.G.order else "refused")
    return status_report("main1", cfg, lhs, ["finite_support"] * len(lhs), [],
                         {"note": "maps between finite sets are proper"})


def _fin_status(cfg, check, note):
    return status_report(check, cfg, ["finite_support"], ["finite_support"], [], {"note": note})


def _fin_main23(cfg, check):
    T = fin_tower(cfg.chain)
    rng = cfg.rng(check)
    lhs, rhs, measure_mismatch = [], [], 0
    for _ in range(cfg.measures):
        mu = fin.random_measure(T.G.order, rng)
        psi = fin.fin_pushforward(mu, T.p_G_Gbar)
        if check == "main2":
            one = fin.fin_pushforward(mu, T.p_G_Gbar.then(T.p_Gbar_GH))
            two = fin.fin_pushforward(psi, T.p_Gbar_GH)
        else:
            one = fin.fin_pushforward(fin.fin_pushforward(mu, T.GH.projection), T.p_GH_GbarHbar)
            two = fin.fin_pushforward(psi, T.GbarHbar.projection)
        measure_mismatch += one != two
        alpha = _rand_alpha(one.size, rng)
        lhs.append(one.pair(alpha))
        rhs.append(two.pair(alpha))
    rep = exact_report(check, cfg, lhs, rhs, {"measure_mismatches": measure_mismatch})
    rep.passed = rep.passed and measure_mismatch == 0
    return rep


def _fin_quotient_pushforward(cfg):
    T = fin_tower(cfg.chain)
    G, H = T.G, T.H
    rng = cfg.rng("quotient_pushforward")
    dG = [fin.fin_modular(G, h) for h in H]
    dH = [fin.fin_modular(T.Hgrp, k) for k in range(len(H))]
    lhs, rhs = [], []
    for _ in range(cfg.measures):
        phi = fin.random_measure(G.order, rng)
        nu = fin.random_measure(G.order, rng)
        alpha = [sum((nu[G.table[T.GH.representatives[c]][h]] for h in H), fin.ZERO) for c in range(len(T.GH))]
        lhs.append(fin.fin_pushforward(phi, T.GH.projection).pair(alpha))
        total = fin.ZERO
        for g in range(G.order):
            if nu[g]:
                inner = sum((phi[G.table[g][h]] * (dG[k] / dH[k]) for k, h in enumerate(H)), fin.ZERO)
                total = total + nu[g] * inner
        rhs.append(total)
    return exact_report("quotient_pushforward", cfg, lhs, rhs)


def _fin_modular(cfg):
    T = fin_tower(cfg.chain)
    lhs, rhs = [], []
    for k, h in enumerate(T.H):
        hbar_G = T.p_G_Gbar(h)
        hbar_H = T.p_H_Hbar(k)
        lhs.append(fin.fin_modular(T.G, h) / fin.fin_modular(T.Gbar, hbar_G))
        rhs.append(fin.fin_modular(T.Hgrp, k) / fin.fin_modular(T.Hbar_grp, hbar_H))
    return exact_report("modular", cfg, lhs, rhs)


def _fin_right_translation(cfg):
    T = fin_tower(cfg.chain)
    rng = cfg.rng("right_translation")
    route = T.p_G_Gbar.then(T.p_Gbar_GH).then(T.p_GH_GbarHbar)
    lhs, rhs = [], []
    for _ in range(cfg.measures // 10):
        phi = fin.random_measure(T.G.order, rng)
        k = int(rng.integers(len(T.H)))
        h = T.H[k]
        shifted = fin.FinMeasure(T.G.order, {g: phi[T.G.table[g][h]] for g in range(T.G.order)})
        scalar = fin.fin_modular(T.Hbar_grp, T.p_H_Hbar(k)) / (
            fin.fin_modular(T.Gbar, T.p_G_Gbar(h)) * fin.fin_modular(T.Hgrp, k))
        alpha = _rand_alpha(len(T.GbarHbar), rng)
        lhs.append(fin.fin_pushforward(shifted, route).pair(alpha))
        rhs.append(fin.fin_pushforward(phi, route).pair(alpha) * scalar)
    return [exact_report("right_translation", cfg, lhs, rhs)]


def _fin_weil(cfg):
    T = fin_tower(cfg.chain)
    rng = cfg.rng("weil")
    lhs, rhs = [], []
    for _ in range(cfg.measures // 10):
        beta = fin.random_measure(T.G.order, rng, density=1.0)
        total, nested = fin.fin_weil_sums(T.G, T.N, [beta[g] for g in range(T.G.order)])
        lhs.append(total)
        rhs.append(nested)
    return exact_report("weil", cfg, lhs, rhs, {"scale": "1"})


def _fin_normal_restriction(cfg):
    T = fin_tower(cfg.chain)
    Ngrp, _ = fin.fin_subgroup_group(T.G, T.N)
    lhs = [fin.fin_modular(T.G, n) for n in T.N]
    rhs = [fin.fin_modular(Ngrp, k) for k in range(len(T.N))]
    return exact_report("normal_restriction", cfg, lhs, rhs)


def _fin_invariants(cfg):
    chain = cfg.chain
    failures, names = [], []
    try:
        chain.G.validate()
        names.append("group law")
        T = fin_tower(chain)
        names.append("tower maps")
        if not fin.is_subgroup(T.G, T.H) or not fin.is_subgroup(T.G, T.N):
            failures.append("H or N is not a subgroup")
        if not fin.is_normal(T.G, T.N):
            failures.append("N is not normal")
        for a in range(T.G.order):
            for b in range(T.G.order):
                if T.p_G_Gbar(T.G.table[a][b]) != T.Gbar.table[T.p_G_Gbar(a)][T.p_G_Gbar(b)]:
                    failures.append("projection to Gbar is not a homomorphism")
                    break
        names.append("quotient homomorphism")
        left = T.p_GH_GbarHbar.assignment
        for g in range(T.G.order):
            if left[T.GH.projection(g)] != T.GbarHbar.projection(T.p_G_Gbar(g)):
                failures.append("square of canonical maps does not commute")
                break
        names.append("canonical square")
    except HaarPushError as exc:
        failures.append(str(exc))
    return status_report("invariants", cfg, ["ok"] * len(names), ["ok"] * len(names), failures,
                         {"checked": names})


def verify_compose(cfg: ChainConfig, trials=200):
    """Composition and support laws for random finite maps (exact)."""
    rng = cfg.rng("compose")
    n1 = cfg.chain.G.order if cfg.is_finite else 24
    lhs, rhs, support_failures, mismatches = [], [], 0, 0
    for t in range(trials):
        n2 = int(rng.integers(1, min(n1, 64) + 1))
        n3 = int(rng.integers(1, n2 + 1))
        p12 = _random_surjection(n1, n2, rng)
        p23 = _random_surjection(n2, n3, rng)
        if t == 0:
            p12, p23 = fin.FinMap(n1, n1, range(n1), "id"), fin.FinMap(n1, 1, [0] * n1, "const")
        mu = fin.random_measure(n1, rng)
        one = fin.fin_pushforward(mu, p12.then(p23))
        two = fin.fin_pushforward(fin.fin_pushforward(mu, p12), p23)
        mismatches += one != two
        if not fin.fin_pushforward(mu, p12).support <= {p12(s) for s in mu.support}:
            support_failures += 1
        alpha = _rand_alpha(n3, rng)
        lhs.append(one.pair(alpha))
        rhs.append(two.pair(alpha))
    rep = exact_report("compose", cfg, lhs, rhs,
                       {"trials": trials, "support_failures": support_failures, "measure_mismatches": mismatches})
    rep.passed = rep.passed and support_failures == 0 and mismatches == 0
    return rep


def _random_surjection(n, m, rng):
    assign = list(range(m)) + rng.integers(0, m, n - m).tolist()
    rng.shuffle(assign)
    return fin.FinMap(n, m, assign)


# ---------------------------------------------------------------- suite


RUNNERS = {
    "main1": verify_main_item1,
    "main2": verify_main_item2,
    "main3": verify_main_item3,
    "main4": verify_main_item4,
    "quotient_pushforward": verify_quotient_pushforward,
    "modular": verify_modular_identity,
    "right_translation": verify_right_translation_scaling,
    "weil": verify_weil,
    "normal_restriction": verify_normal_restriction,
    "compose": verify_compose,
    "invariants": verify_invariants,
}


def run_check(cfg: ChainConfig, check) -> list:
    """Run one check; errors become failing reports instead of exceptions."""
    t0 = time.perf_counter()
    try:
        out = RUNNERS[check](cfg)
        reports = out if isinstance(out, list) else [out]
    except HaarPushError as exc:
        reports = [VerificationReport(check, cfg.name, digest(cfg, check), [], [], float("inf"), float("inf"),
                                      cfg.tol(check), 0.0, False, {"error": f"{type(exc).__name__}: {exc}"})]
    dt = time.perf_counter() - t0
    for r in reports:
        r.wall_time = dt / len(reports)
    return reports


def run_suite(configs, checks=None, workers=None):
    """Run (chain, check) jobs concurrently; reports come back in job order.

    Returns ``(reports, skipped)`` where ``skipped`` lists checks a chain does not support.
    """
    jobs, skipped = [], []
    for cfg in configs:
        wanted = checks or cfg.chain.checks
        for check in wanted:
            if check not in RUNNERS:
                raise KeyError(check)
            if check in cfg.chain.checks:
                jobs.append((cfg, check))
            else:
                skipped.append({"chain": cfg.name, "check": check})
    for cfg in configs:
        if not cfg.is_finite:
            try:
                cfg.chain.descent  # build shared caches before fanning out
            except HaarPushError:
                pass
    workers = workers or min(4, max(1, len(jobs)))
    if workers == 1:
        results = [run_check(c, k) for c, k in jobs]
    else:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(lambda job: run_check(*job), jobs))
    return [r for rs in results for r in rs], skipped
