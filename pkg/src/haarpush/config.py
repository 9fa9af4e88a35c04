"""Run configuration: TOML parsing, validation and dumping.

A config file has top-level run settings, an ``[integrator]`` table, a
``[tolerances]`` table and one ``[[chains]]`` entry per chain.  A chain entry
either names a catalog chain or defines one inline; see the README for the
grammar.  Subgroup maps of inline chains are arithmetic expressions in the
coordinates ``x0, x1, ...`` (group) and ``y0, y1, ...`` (subgroup).
"""
from __future__ import annotations

import ast
import copy
import dataclasses
import operator
from dataclasses import asdict, dataclass, field
from pathlib import Path

import tomli
import tomli_w

from . import dual
from .chains import ALIASES, FIN_CHAINS, LIE_CHAINS, FinChain, LieChain, get_chain, positive_reals, product_form
from .errors import ConfigError, HaarPushError
from .finite import fin_group, fin_subgroup, load_cayley
from .groups import by_name
from .integrate import Integrator
from .measure import bump_density
from .quotient import Split, SubgroupEmbedding, trivial_subgroup
from .verify import CHECKS, DEFAULT_ABS_FLOOR, ChainConfig

FORMATS = ("json", "md", "csv")

# ---------------------------------------------------------------- expressions

_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul, ast.Div: operator.truediv,
           ast.Pow: operator.pow}
_UNOPS = {ast.USub: operator.neg, ast.UAdd: operator.pos}
_FUNCS = {"exp": dual.exp, "log": dual.log, "sqrt": dual.sqrt}


def compile_expr(src, prefix, arity, path):
    """Compile an arithmetic expression in ``{prefix}0 .. {prefix}{arity-1}``.

    Only numbers, the named variables, + - * / ** and exp/log/sqrt are allowed,
    so the result works on floats, arrays and dual numbers alike.
    """
    if isinstance(src, (int, float)):
        c = float(src)
        return lambda v: c
    try:
        tree = ast.parse(str(src), mode="eval")
    except SyntaxError as exc:
        raise ConfigError(f"invalid expression {src!r}: {exc.msg}", path) from None
    names = {f"{prefix}{i}": i for i in range(arity)}

    def check(node):
        if isinstance(node, ast.Expression):
            return check(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return
        if isinstance(node, ast.Name):
            if node.id not in names:
                raise ConfigError(f"unknown variable {node.id!r} in {src!r}", path)
            return
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            check(node.left)
            check(node.right)
            return
        if isinstance(node, ast.UnaryOp) and type(node.op) in _UNOPS:
            check(node.operand)
            return
        if (isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and node.func.id in _FUNCS
                and len(node.args) == 1 and not node.keywords):
            check(node.args[0])
            return
        raise ConfigError(f"unsupported syntax in expression {src!r}", path)

    check(tree)

    def ev(node, v):
        if isinstance(node, ast.Expression):
            return ev(node.body, v)
        if isinstance(node, ast.Constant):
            return float(node.value)
        if isinstance(node, ast.Name):
            return v[names[node.id]]
        if isinstance(node, ast.BinOp):
            return _BINOPS[type(node.op)](ev(node.left, v), ev(node.right, v))
        if isinstance(node, ast.UnaryOp):
            return _UNOPS[type(node.op)](ev(node.operand, v))
        return _FUNCS[node.func.id](ev(node.args[0], v))

    return lambda v: ev(tree, v)


def compile_map(exprs, prefix, arity, path):
    fns = [compile_expr(e, prefix, arity, f"{path}[{i}]") for i, e in enumerate(exprs)]
    return lambda v: tuple(f(v) for f in fns)


# ---------------------------------------------------------------- run config


@dataclass
class RunConfig:
    chains: list = field(default_factory=list)
    checks: list | None = None
    integrator: dict = field(default_factory=dict)
    rel_tol: float | None = None
    abs_floor: float = DEFAULT_ABS_FLOOR
    n_random: int = 5
    measures: int = 200
    seed: int | None = None
    format: str = "json"
    out: str | None = None
    workers: int = 1

    def to_toml(self) -> str:
        doc = {"n_random": self.n_random, "measures": self.measures, "format": self.format,
               "workers": self.workers}
        if self.seed is not None:
            doc["seed"] = self.seed
        if self.out is not None:
            doc["out"] = self.out
        if self.checks is not None:
            doc["checks"] = list(self.checks)
        if self.integrator:
            doc["integrator"] = dict(self.integrator)
        tol = {"abs_floor": self.abs_floor}
        if self.rel_tol is not None:
            tol["rel_tol"] = self.rel_tol
        doc["tolerances"] = tol
        doc["chains"] = [copy.deepcopy(c) for c in self.chains]
        return tomli_w.dumps(doc)

    def make_integrator(self):
        if not self.integrator:
            return None
        try:
            return Integrator(**self.integrator)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc), "integrator") from None

    def chain_configs(self, seed):
        integ = self.make_integrator()
        out = []
        for i, spec in enumerate(self.chains):
            chain = build_chain(spec, f"chains[{i}]")
            out.append(ChainConfig(chain, integrator=integ, rel_tol=self.rel_tol, abs_floor=self.abs_floor,
                                   n_random=self.n_random, seed=seed, measures=self.measures))
        return out


_TOP_KEYS = {"chains", "checks", "integrator", "tolerances", "n_random", "measures", "seed", "format", "out",
             "workers"}
_INTEGRATOR_KEYS = {"kind", "order", "panels", "samples", "seed", "error_estimate", "chunk"}


def _expect(cond, msg, path):
    if not cond:
        raise ConfigError(msg, path)


def _int(doc, key, default, path, minimum=None):
    v = doc.get(key, default)
    _expect(v is None or (isinstance(v, int) and not isinstance(v, bool)), f"{key} must be an integer",
            f"{path}{key}")
    if v is not None and minimum is not None:
        _expect(v >= minimum, f"{key} must be >= {minimum}", f"{path}{key}")
    return v


def from_dict(doc: dict) -> RunConfig:
    unknown = set(doc) - _TOP_KEYS
    _expect(not unknown, f"unknown keys {sorted(unknown)}", sorted(unknown)[0] if unknown else None)
    chains = doc.get("chains", [])
    _expect(isinstance(chains, list), "chains must be an array of tables", "chains")
    for i, c in enumerate(chains):
        _check_chain_spec(c, f"chains[{i}]")
    checks = doc.get("checks")
    if checks is not None:
        _expect(isinstance(checks, list), "checks must be a list", "checks")
        for i, c in enumerate(checks):
            _expect(c in CHECKS, f"unknown check {c!r}; known: {', '.join(CHECKS)}", f"checks[{i}]")
    integ = doc.get("integrator", {})
    _expect(isinstance(integ, dict), "integrator must be a table", "integrator")
    bad = set(integ) - _INTEGRATOR_KEYS
    _expect(not bad, f"unknown integrator keys {sorted(bad)}", "integrator")
    try:
        Integrator(**integ)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc), "integrator") from None
    tol = doc.get("tolerances", {})
    _expect(isinstance(tol, dict), "tolerances must be a table", "tolerances")
    bad = set(tol) - {"rel_tol", "abs_floor"}
    _expect(not bad, f"unknown tolerance keys {sorted(bad)}", "tolerances")
    rel_tol = tol.get("rel_tol")
    _expect(rel_tol is None or (isinstance(rel_tol, (int, float)) and rel_tol > 0), "rel_tol must be positive",
            "tolerances.rel_tol")
    abs_floor = tol.get("abs_floor", DEFAULT_ABS_FLOOR)
    _expect(isinstance(abs_floor, (int, float)) and abs_floor > 0, "abs_floor must be positive",
            "tolerances.abs_floor")
    fmt = doc.get("format", "json")
    _expect(fmt in FORMATS, f"format must be one of {FORMATS}", "format")
    out = doc.get("out")
    _expect(out is None or isinstance(out, str), "out must be a path string", "out")
    return RunConfig(
        chains=chains,
        checks=checks,
        integrator=dict(integ),
        rel_tol=None if rel_tol is None else float(rel_tol),
        abs_floor=float(abs_floor),
        n_random=_int(doc, "n_random", 5, "", 1),
        measures=_int(doc, "measures", 200, "", 1),
        seed=_int(doc, "seed", None, ""),
        format=fmt,
        out=out,
        workers=_int(doc, "workers", 1, "", 1),
    )


def loads(text: str) -> RunConfig:
    try:
        doc = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"TOML syntax error: {exc}", None) from None
    return from_dict(doc)


def load(path) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}", None) from None
    return loads(text)


# ---------------------------------------------------------------- chain specs


def _check_chain_spec(spec, path):
    _expect(isinstance(spec, dict), "chain entry must be a table", path)
    _expect(isinstance(spec.get("name"), str), "chain needs a string name", f"{path}.name")
    inline = set(spec) - {"name"}
    if not inline:
        _expect(spec["name"] in LIE_CHAINS or spec["name"] in FIN_CHAINS or spec["name"] in ALIASES,
                f"unknown catalog chain {spec['name']!r}", f"{path}.name")
        return
    backend = spec.get("backend")
    _expect(backend in ("lie", "finite"), "inline chain needs backend = 'lie' or 'finite'", f"{path}.backend")


def build_chain(spec, path="chain"):
    """Catalog lookup or inline construction; all errors carry the field path."""
    if set(spec) == {"name"}:
        return get_chain(spec["name"])
    try:
        if spec["backend"] == "finite":
            return _build_finite(spec, path)
        return _build_lie(spec, path)
    except ConfigError:
        raise
    except (HaarPushError, KeyError, ValueError, TypeError, IndexError) as exc:
        raise ConfigError(f"{type(exc).__name__}: {exc}", path) from None


def _build_finite(spec, path):
    if "table" in spec:
        G = load_cayley(Path(spec["table"]).read_text(), spec["name"])
    else:
        _expect("group" in spec, "finite chain needs group or table", f"{path}.group")
        G = fin_group(spec["group"])
    H = fin_subgroup(G, spec.get("H", []))
    N = fin_subgroup(G, spec.get("N", []))
    return FinChain(spec["name"], G, H, N, spec.get("description", "inline finite chain"))


def _split(d, path):
    _expect(isinstance(d, dict) and "base" in d and "fiber" in d, "split needs base and fiber lists", path)
    return Split(tuple(d["base"]), tuple(d["fiber"]))


def _subgroup(G, d, path):
    if d is None or d == "trivial":
        return trivial_subgroup(G)
    _expect(isinstance(d, dict), "subgroup must be a table", path)
    law_name = d.get("law", "R^n:1")
    law = positive_reals() if law_name == "R>0" else by_name(law_name)
    _expect("include" in d and "restrict" in d, "subgroup needs include and restrict", path)
    _expect(len(d["include"]) == G.dim, f"include must give {G.dim} expressions", f"{path}.include")
    _expect(len(d["restrict"]) == law.dim, f"restrict must give {law.dim} expressions", f"{path}.restrict")
    sub = dataclasses.replace(law, name=d.get("name", f"{path}-sub"), embed=None)
    inc = compile_map(d["include"], "y", law.dim, f"{path}.include")
    res = compile_map(d["restrict"], "x", G.dim, f"{path}.restrict")
    return SubgroupEmbedding(sub, G, inc, res, d.get("name", sub.name))


def _density(G, d, path):
    kind = d.get("kind", "bump")
    if kind == "bump":
        return bump_density(G, d["center"], d["radius"], d.get("amplitude", 1.0))
    if kind == "product":
        return product_form(G, tuple(d["free"]), tuple(d["compact"]), d["center"], d["radius"],
                            m=d.get("m"), label=d.get("label"))
    raise ConfigError(f"unknown density kind {kind!r}", f"{path}.kind")


def _build_lie(spec, path):
    G = by_name(spec["group"])
    N = _subgroup(G, spec.get("N"), f"{path}.N")
    H = N if spec.get("H", "N") == "N" else _subgroup(G, spec.get("H"), f"{path}.H")
    split_N = _split(spec.get("split_N"), f"{path}.split_N")
    split_H = split_N if H is N else _split(spec.get("split_H"), f"{path}.split_H")
    split_NH = _split(spec.get("split_NH"), f"{path}.split_NH")
    dens = [_density(G, d, f"{path}.densities[{i}]") for i, d in enumerate(spec.get("densities", []))]
    _expect(dens, "chain needs at least one density", f"{path}.densities")
    refused = [_density(G, d, f"{path}.refused[{i}]") for i, d in enumerate(spec.get("refused", []))]
    integ = Integrator(**spec["integrator"]) if "integrator" in spec else Integrator()
    checks = tuple(spec.get("checks", LieChain.__dataclass_fields__["checks"].default))
    return LieChain(spec["name"], G, H, N, split_H, split_N, split_NH, dens, refused,
                    right_shift=tuple(spec.get("right_shift", H.sub.identity)),
                    linear_points=int(spec.get("linear_points", 5)), cover_tests=bool(spec.get("cover_tests", False)),
                    integrator=integ, description=spec.get("description", "inline chain"), checks=checks,
                    tolerances=dict(spec.get("tolerances", {})))


def resolve_seed(cli_seed, cfg_seed, environ):
    """--seed beats the config file, which beats HAARPUSH_SEED; the default is 0."""
    for v in (cli_seed, cfg_seed):
        if v is not None:
            return int(v)
    env = environ.get("HAARPUSH_SEED")
    if env:
        try:
            return int(env)
        except ValueError:
            raise ConfigError(f"HAARPUSH_SEED must be an integer, got {env!r}", "HAARPUSH_SEED") from None
    return 0


def as_dict(cfg: RunConfig):
    return asdict(cfg)


def validate_chains(cfg: RunConfig):
    """Build every chain once so config errors surface before any check runs."""
    for i, spec in enumerate(cfg.chains):
        chain = build_chain(spec, f"chains[{i}]")
        if isinstance(chain, LieChain):
            try:
                chain.descent
            except HaarPushError as exc:
                raise ConfigError(str(exc), f"chains[{i}]") from None
    return True


__all__ = ["RunConfig", "load", "loads", "from_dict", "build_chain", "compile_expr", "resolve_seed",
           "validate_chains", "FORMATS"]
