"""Exact finite-group backend.

Haar measure on a finite group is the counting measure, measures carry
complex-rational weights, and every identity is checked as an exact equality.
"""
from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property

import numpy as np

from .errors import ConfigError, NotNormalError, SubgroupError


@dataclass(frozen=True, order=True)
class ComplexRational:
    re: Fraction = Fraction(0)
    im: Fraction = Fraction(0)

    def __post_init__(self):
        object.__setattr__(self, "re", Fraction(self.re))
        object.__setattr__(self, "im", Fraction(self.im))

    @classmethod
    def of(cls, x):
        if isinstance(x, ComplexRational):
            return x
        if isinstance(x, complex):
            return cls(Fraction(x.real), Fraction(x.imag))
        if isinstance(x, str):
            return cls.parse(x)
        return cls(Fraction(x))

    @classmethod
    def parse(cls, s):
        s = s.replace(" ", "")
        m = re.fullmatch(r"([+-]?[0-9/]+)?(?:([+-][0-9/]*)i)?", s)
        if not m or not s:
            raise ValueError(f"cannot parse complex rational {s!r}")
        re_part = Fraction(m.group(1)) if m.group(1) else Fraction(0)
        im = m.group(2)
        if im is None:
            im_part = Fraction(0)
        elif im in "+-":
            im_part = Fraction(int(im + "1"))
        else:
            im_part = Fraction(im)
        return cls(re_part, im_part)

    def __add__(self, o):
        o = ComplexRational.of(o)
        return ComplexRational(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __neg__(self):
        return ComplexRational(-self.re, -self.im)

    def __sub__(self, o):
        return self + (-ComplexRational.of(o))

    def __rsub__(self, o):
        return ComplexRational.of(o) - self

    def __mul__(self, o):
        o = ComplexRational.of(o)
        return ComplexRational(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)

    __rmul__ = __mul__

    def __truediv__(self, o):
        o = ComplexRational.of(o)
        d = o.re * o.re + o.im * o.im
        if d == 0:
            raise ZeroDivisionError("division by zero complex rational")
        return self * ComplexRational(o.re / d, -o.im / d)

    def __eq__(self, o):
        try:
            o = ComplexRational.of(o)
        except (TypeError, ValueError):
            return NotImplemented
        return self.re == o.re and self.im == o.im

    def __hash__(self):
        return hash((self.re, self.im))

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __str__(self):
        if not self.im:
            return str(self.re)
        sign = "+" if self.im > 0 else "-"
        re_part = str(self.re) if self.re else ""
        if not re_part and sign == "+":
            sign = ""
        return f"{re_part}{sign}{abs(self.im)}i"


ZERO = ComplexRational()
ONE = ComplexRational(1)


# ---------------------------------------------------------------- groups


@dataclass(frozen=True)
class FinGroup:
    """Finite group given by labels and a Cayley table ``table[i][j] = index of e_i e_j``."""

    elements: tuple
    table: tuple
    identity_index: int = 0
    name: str = ""
    check: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "elements", tuple(str(e) for e in self.elements))
        object.__setattr__(self, "table", tuple(tuple(int(v) for v in row) for row in self.table))
        if self.check:
            self.validate()

    @property
    def order(self):
        return len(self.elements)

    def __len__(self):
        return len(self.elements)

    def mul(self, i, j):
        return self.table[i][j]

    @cached_property
    def inverses(self):
        e = self.identity_index
        return tuple(next(j for j in range(self.order) if self.table[i][j] == e) for i in range(self.order))

    def inv(self, i):
        return self.inverses[i]

    def index(self, label):
        if isinstance(label, (int, np.integer)):
            return int(label)
        label = str(label)
        if label.startswith("(") and label not in self.elements:
            label = cycle_label(parse_cycles(label, 64))
        try:
            return self.elements.index(label)
        except ValueError:
            raise SubgroupError(f"{label!r} is not an element of {self.name}") from None

    def element_order(self, i):
        k, x = 1, i
        while x != self.identity_index:
            x = self.table[x][i]
            k += 1
        return k

    def order_multiset(self, indices=None):
        return sorted(self.element_order(i) for i in (range(self.order) if indices is None else indices))

    def validate(self, rng=None, samples=20000):
        n, T, e = self.order, self.table, self.identity_index
        if len(T) != n or any(len(row) != n for row in T):
            raise ConfigError("Cayley table is not square", None)
        if any(not 0 <= v < n for row in T for v in row):
            raise ConfigError("Cayley table entry out of range", None)
        for i in range(n):
            if T[e][i] != i or T[i][e] != i:
                raise SubgroupError(f"{self.name}: {self.elements[e]} is not an identity")
            if len(set(T[i])) != n:
                raise SubgroupError(f"{self.name}: row {i} is not a permutation (no inverses)")
        if n <= 64:
            triples = itertools.product(range(n), repeat=3)
        else:
            rng = rng or np.random.default_rng(0)
            triples = rng.integers(0, n, size=(samples, 3)).tolist()
        for a, b, c in triples:
            if T[T[a][b]][c] != T[a][T[b][c]]:
                raise SubgroupError(f"{self.name}: table is not associative")
        return True


def from_permutations(perms, name, labels=None) -> FinGroup:
    """Group of permutations (tuples of images), sorted so the identity comes first."""
    perms = sorted({tuple(p) for p in perms})
    deg = len(perms[0])
    ident = tuple(range(deg))
    perms.remove(ident)
    perms.insert(0, ident)
    pos = {p: k for k, p in enumerate(perms)}
    # (p q)(i) = p(q(i)): apply q first
    table = [[pos[tuple(p[q[i]] for i in range(deg))] for q in perms] for p in perms]
    return FinGroup(labels or [cycle_label(p) for p in perms], table, 0, name)


def cycle_label(p):
    """1-based cycle notation, e.g. '(1 2)(3 4)'; the identity is '()'."""
    seen, out = set(), []
    for i in range(len(p)):
        if i in seen or p[i] == i:
            continue
        cyc, j = [], i
        while j not in seen:
            seen.add(j)
            cyc.append(j + 1)
            j = p[j]
        out.append("(" + " ".join(map(str, cyc)) + ")")
    return "".join(out) or "()"


def parse_cycles(s, degree):
    """Inverse of :func:`cycle_label`; single-digit cycles may omit spaces, '(12)(34)'."""
    p = list(range(degree))
    for body in re.findall(r"\(([^)]*)\)", s):
        pts = body.split() if " " in body.strip() or "," in body else list(body)
        pts = [int(t.strip(",")) - 1 for t in pts if t.strip(",")]
        for a, b in zip(pts, pts[1:] + pts[:1]):
            p[a] = b
    return tuple(p)


def cyclic(n) -> FinGroup:
    return FinGroup([str(i) for i in range(n)], [[(i + j) % n for j in range(n)] for i in range(n)], 0, f"Z{n}")


def symmetric(deg) -> FinGroup:
    return from_permutations(itertools.permutations(range(deg)), f"S{deg}")


def _parity(p):
    inv = sum(1 for i in range(len(p)) for j in range(i + 1, len(p)) if p[i] > p[j])
    return inv % 2


def alternating(deg) -> FinGroup:
    return from_permutations([p for p in itertools.permutations(range(deg)) if _parity(p) == 0], f"A{deg}")


def klein4() -> FinGroup:
    return from_permutations([(0, 1, 2, 3), (1, 0, 3, 2), (2, 3, 0, 1), (3, 2, 1, 0)], "V4")


def dihedral4() -> FinGroup:
    """Symmetries of the square acting on its vertices 1..4."""
    r, s = (1, 2, 3, 0), (0, 3, 2, 1)
    return from_permutations(_closure_perms([r, s]), "D4")


def quaternion8() -> FinGroup:
    labels = ["1", "-1", "i", "-i", "j", "-j", "k", "-k"]
    # unit quaternions as (sign, axis) with axis 0=1, 1=i, 2=j, 3=k
    mult = {(1, 1): (-1, 0), (2, 2): (-1, 0), (3, 3): (-1, 0), (1, 2): (1, 3), (2, 3): (1, 1), (3, 1): (1, 2),
            (2, 1): (-1, 3), (3, 2): (-1, 1), (1, 3): (-1, 2)}
    elems = [(1, 0), (-1, 0), (1, 1), (-1, 1), (1, 2), (-1, 2), (1, 3), (-1, 3)]

    def prod(x, y):
        (sx, ax), (sy, ay) = x, y
        if ax == 0:
            return sx * sy, ay
        if ay == 0:
            return sx * sy, ax
        s, a = mult[(ax, ay)]
        return sx * sy * s, a

    table = [[elems.index(prod(x, y)) for y in elems] for x in elems]
    return FinGroup(labels, table, 0, "Q8")


def _closure_perms(gens):
    deg = len(gens[0])
    out = {tuple(range(deg))}
    frontier = list(out)
    while frontier:
        new = []
        for p in frontier:
            for q in gens:
                r = tuple(p[q[i]] for i in range(deg))
                if r not in out:
                    out.add(r)
                    new.append(r)
        frontier = new
    return out


FINITE_GROUPS = {
    "S4": lambda: symmetric(4),
    "A4": lambda: alternating(4),
    "V4": klein4,
    "D4": dihedral4,
    "Q8": quaternion8,
}


def fin_group(name) -> FinGroup:
    if name in FINITE_GROUPS:
        return FINITE_GROUPS[name]()
    m = re.fullmatch(r"Z(\d+)", name)
    if m and int(m.group(1)) >= 1:
        return cyclic(int(m.group(1)))
    raise ConfigError(f"unknown finite group {name!r}", None)


# ---------------------------------------------------------------- Cayley-table text format


def dump_cayley(G: FinGroup) -> str:
    lines = [str(G.order)]
    lines += [" ".join(map(str, row)) for row in G.table]
    lines += ["labels"] + list(G.elements)
    return "\n".join(lines) + "\n"


def load_cayley(text, name="custom") -> FinGroup:
    """First line |G|, then |G| rows of indices; an optional trailing section of labels.

    The labels section may start with a line reading ``labels``.  The identity is
    the row that acts trivially.
    """
    lines = [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.strip().startswith("#")]
    if not lines:
        raise ConfigError("empty Cayley table", None)
    try:
        n = int(lines[0])
        rows = [[int(v) for v in ln.split()] for ln in lines[1:1 + n]]
    except ValueError as exc:
        raise ConfigError(f"malformed Cayley table: {exc}", None) from None
    if len(rows) != n or any(len(r) != n for r in rows):
        raise ConfigError("Cayley table must have |G| rows of |G| entries", None)
    rest = lines[1 + n:]
    if rest and rest[0].lower() == "labels":
        rest = rest[1:]
    labels = rest if rest else [str(i) for i in range(n)]
    if len(labels) != n:
        raise ConfigError("label section must list |G| labels", None)
    ident = next((i for i in range(n) if rows[i] == list(range(n))), None)
    if ident is None:
        raise SubgroupError("Cayley table has no identity row")
    return FinGroup(labels, rows, ident, name)


# ---------------------------------------------------------------- subgroups, cosets, quotients


@dataclass(frozen=True)
class FinMap:
    """Total map between finite sets ``range(source_size) -> range(target_size)``."""

    source_size: int
    target_size: int
    assignment: tuple
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "assignment", tuple(int(a) for a in self.assignment))
        if len(self.assignment) != self.source_size:
            raise ValueError("map must be total on its source")
        if any(not 0 <= a < self.target_size for a in self.assignment):
            raise ValueError("map lands outside its target")

    def __call__(self, i):
        return self.assignment[i]

    def then(self, other: "FinMap") -> "FinMap":
        """other o self."""
        if other.source_size != self.target_size:
            raise ValueError("maps do not compose")
        return FinMap(self.source_size, other.target_size, [other.assignment[a] for a in self.assignment],
                      f"{other.name} o {self.name}")


def fin_subgroup(G: FinGroup, gens) -> tuple:
    """Closure of ``gens`` (labels or indices) under the group law, as a sorted index tuple."""
    gens = [G.index(g) for g in gens]
    out = {G.identity_index}
    frontier = list(out)
    while frontier:
        new = []
        for x in frontier:
            for s in gens:
                y = G.table[x][s]
                if y not in out:
                    out.add(y)
                    new.append(y)
        frontier = new
    return tuple(sorted(out))


def is_subgroup(G: FinGroup, H) -> bool:
    H = set(H)
    return G.identity_index in H and all(G.table[a][b] in H for a in H for b in H)


@dataclass(frozen=True)
class FinCosets:
    cosets: tuple
    projection: FinMap

    @property
    def representatives(self):
        return tuple(c[0] for c in self.cosets)

    def __len__(self):
        return len(self.cosets)


def fin_cosets(G: FinGroup, H) -> FinCosets:
    """Left cosets gH ordered by their smallest element, which serves as representative."""
    H = tuple(sorted(set(H)))
    if not is_subgroup(G, H):
        raise SubgroupError("not a subgroup")
    label = [-1] * G.order
    cosets = []
    for g in range(G.order):
        if label[g] >= 0:
            continue
        c = tuple(sorted(G.table[g][h] for h in H))
        for x in c:
            label[x] = len(cosets)
        cosets.append(c)
    return FinCosets(tuple(cosets), FinMap(G.order, len(cosets), label, f"p[{G.name}->{G.name}/H]"))


def is_normal(G: FinGroup, N) -> bool:
    N = set(N)
    return all({G.table[g][n] for n in N} == {G.table[n][g] for n in N} for g in range(G.order))


def fin_quotient_group(G: FinGroup, N, name=None):
    """(Gbar, projection) for a normal subgroup N."""
    N = tuple(sorted(set(N)))
    if not is_subgroup(G, N):
        raise SubgroupError("not a subgroup")
    if not is_normal(G, N):
        raise NotNormalError("subgroup not normal")
    cs = fin_cosets(G, N)
    p = cs.projection
    reps = cs.representatives
    table = [[p(G.table[a][b]) for b in reps] for a in reps]
    labels = ["{" + ",".join(G.elements[x] for x in c) + "}" for c in cs.cosets]
    Gbar = FinGroup(labels, table, p(G.identity_index), name or f"{G.name}/N")
    return Gbar, FinMap(G.order, Gbar.order, p.assignment, f"p[{G.name}->{Gbar.name}]")


# ---------------------------------------------------------------- measures


@dataclass(frozen=True)
class FinMeasure:
    """Measure on ``range(size)`` with exact complex-rational weights."""

    size: int
    weights: dict = field(default_factory=dict)

    def __post_init__(self):
        w = {int(k): ComplexRational.of(v) for k, v in dict(self.weights).items()}
        if any(not 0 <= k < self.size for k in w):
            raise ValueError("weight index outside the underlying set")
        object.__setattr__(self, "weights", {k: v for k, v in sorted(w.items()) if v})

    @property
    def support(self):
        return frozenset(self.weights)

    def __getitem__(self, i):
        return self.weights.get(i, ZERO)

    def __eq__(self, other):
        return isinstance(other, FinMeasure) and self.size == other.size and self.weights == other.weights

    def __add__(self, other):
        keys = set(self.weights) | set(other.weights)
        return FinMeasure(self.size, {k: self[k] + other[k] for k in keys})

    def scale(self, c):
        return FinMeasure(self.size, {k: v * c for k, v in self.weights.items()})

    def pair(self, alpha):
        """sum_s alpha(s) mu(s) for a function given as a sequence or callable."""
        total = ZERO
        for k, v in self.weights.items():
            total = total + v * ComplexRational.of(alpha(k) if callable(alpha) else alpha[k])
        return total


def counting_measure(size, value=1) -> FinMeasure:
    return FinMeasure(size, {i: value for i in range(size)})


def point_mass(size, i) -> FinMeasure:
    return FinMeasure(size, {i: 1})


def random_measure(size, rng, density=0.6, denominator=7) -> FinMeasure:
    w = {}
    for i in range(size):
        if rng.uniform() < density:
            w[i] = ComplexRational(Fraction(int(rng.integers(-9, 10)), int(rng.integers(1, denominator + 1))),
                                   Fraction(int(rng.integers(-9, 10)), int(rng.integers(1, denominator + 1))))
    return FinMeasure(size, w)


def random_map(source_size, target_size, rng, name="") -> FinMap:
    return FinMap(source_size, target_size, rng.integers(0, target_size, source_size).tolist(), name)


def fin_pushforward(mu: FinMeasure, p: FinMap) -> FinMeasure:
    """Fiber sums: p_*(mu)(t) = sum_{p(s) = t} mu(s)."""
    if mu.size != p.source_size:
        raise ValueError("measure and map live on different sets")
    out = {}
    for s, v in mu.weights.items():
        t = p(s)
        out[t] = out.get(t, ZERO) + v
    return FinMeasure(p.target_size, out)


def fin_modular(G: FinGroup, h, f=None) -> Fraction:
    """Delta(h) from  sum_g f(g h^-1) = Delta(h) sum_g f(g)  with counting measure."""
    h = G.index(h)
    if f is None:
        f = [Fraction(i + 1) for i in range(G.order)]
    hinv = G.inv(h)
    lhs = sum(Fraction(f[G.table[g][hinv]]) for g in range(G.order))
    rhs = sum(Fraction(v) for v in f)
    return lhs / rhs


def fin_weil_sums(G: FinGroup, N, beta):
    """(sum_G beta, sum_{Gbar} sum_N beta(s(gbar) n)) with coset representatives as section."""
    reps = fin_cosets(G, N).representatives
    total = sum((ComplexRational.of(beta[g]) for g in range(G.order)), ZERO)
    nested = sum((ComplexRational.of(beta[G.table[r][n]]) for r in reps for n in N), ZERO)
    return total, nested


def fin_subgroup_group(G: FinGroup, H, name=None):
    """The subgroup H as a group in its own right, plus the inclusion as a FinMap."""
    H = tuple(sorted(set(H)))
    if not is_subgroup(G, H):
        raise SubgroupError("not a subgroup")
    pos = {g: k for k, g in enumerate(H)}
    table = [[pos[G.table[a][b]] for b in H] for a in H]
    sub = FinGroup([G.elements[h] for h in H], table, pos[G.identity_index], name or f"{G.name}|H")
    return sub, FinMap(len(H), G.order, H, f"include[{sub.name}]")
