"""Rate variables, linear constraints and superset-closed subset families."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from ..netgraph import PacketId, nonempty_subsets

# kind -> column-name prefix
KINDS = {
    "packet": "R",
    "aux_prime": "Rp",
    "aux_double": "Rpp",
    "aux_tilde": "Rt",
    "broadcast": "Rb",
}


@dataclass(frozen=True, order=True)
class RateVar:
    kind: str
    source: int
    sinks: tuple[int, ...] = ()

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown rate kind {self.kind!r}")
        if (self.kind == "broadcast") != (not self.sinks):
            raise ValueError("broadcast rates carry no sink set; all others need one")
        object.__setattr__(self, "sinks", tuple(sorted(set(self.sinks))))

    @classmethod
    def packet(cls, i: int, sinks: Iterable[int]) -> "RateVar":
        return cls("packet", i, tuple(sinks))

    @classmethod
    def prime(cls, i: int, sinks: Iterable[int]) -> "RateVar":
        return cls("aux_prime", i, tuple(sinks))

    @classmethod
    def double(cls, i: int, sinks: Iterable[int]) -> "RateVar":
        return cls("aux_double", i, tuple(sinks))

    @classmethod
    def tilde(cls, i: int, sinks: Iterable[int]) -> "RateVar":
        return cls("aux_tilde", i, tuple(sinks))

    @classmethod
    def broadcast(cls, i: int) -> "RateVar":
        return cls("broadcast", i)

    @classmethod
    def of(cls, p: PacketId) -> "RateVar":
        return cls.packet(p.source, p.sinks)

    @property
    def packet_id(self) -> PacketId | None:
        return PacketId(self.source, self.sinks) if self.sinks else None

    @property
    def name(self) -> str:
        prefix = KINDS[self.kind]
        if not self.sinks:
            return f"{prefix}_{self.source}"
        return f"{prefix}_{self.source}_{'+'.join(map(str, self.sinks))}"

    @classmethod
    def parse(cls, name: str) -> "RateVar":
        prefix, _, rest = name.partition("_")
        kind = {v: k for k, v in KINDS.items()}.get(prefix)
        if kind is None or not rest:
            raise ValueError(f"bad rate variable name {name!r}")
        src, _, sinks = rest.partition("_")
        return cls(kind, int(src), tuple(int(k) for k in sinks.split("+")) if sinks else ())

    def __str__(self) -> str:
        return self.name


@dataclass
class LinearConstraint:
    """sum(coeffs[v] * v) >= rhs; ``label`` describes the rhs symbolically."""

    coeffs: dict[RateVar, float]
    rhs: float
    label: str = ""

    def __post_init__(self):
        self.coeffs = {v: float(c) for v, c in self.coeffs.items() if c != 0}
        if not self.coeffs:
            raise ValueError(f"constraint {self.label!r} has no nonzero coefficient")
        if not np.isfinite(self.rhs):
            raise ValueError(f"constraint {self.label!r} has non-finite rhs")
        self.rhs = float(self.rhs)

    def lhs(self, assignment: Mapping[RateVar, float]) -> float:
        return sum(c * assignment.get(v, 0.0) for v, c in self.coeffs.items())

    def __str__(self) -> str:
        terms = " + ".join(
            (v.name if c == 1 else f"-{v.name}" if c == -1 else f"{c:g}*{v.name}")
            for v, c in self.coeffs.items()
        ).replace("+ -", "- ")
        return f"{terms} >= {self.rhs:.12g}" + (f"   [{self.label}]" if self.label else "")


@dataclass
class RateRegion:
    vars: list[RateVar]
    constraints: list[LinearConstraint] = field(default_factory=list)
    provenance: str = ""

    def __post_init__(self):
        self.vars = list(dict.fromkeys(self.vars))
        known = set(self.vars)
        for c in self.constraints:
            stray = set(c.coeffs) - known
            if stray:
                raise ValueError(f"constraint {c.label!r} uses uncataloged {sorted(v.name for v in stray)}")

    def add(self, coeffs: Mapping[RateVar, float], rhs: float, label: str = "") -> None:
        c = LinearConstraint(dict(coeffs), rhs, label)
        stray = set(c.coeffs) - set(self.vars)
        if stray:
            raise ValueError(f"constraint {label!r} uses uncataloged {sorted(v.name for v in stray)}")
        self.constraints.append(c)

    def matrix(self) -> tuple[np.ndarray, np.ndarray]:
        """(A, b) with rows A x >= b over ``self.vars`` order."""
        col = {v: k for k, v in enumerate(self.vars)}
        A = np.zeros((len(self.constraints), len(self.vars)))
        b = np.zeros(len(self.constraints))
        for r, c in enumerate(self.constraints):
            for v, a in c.coeffs.items():
                A[r, col[v]] = a
            b[r] = c.rhs
        return A, b

    def violations(self, assignment: Mapping[RateVar, float], tol: float = 1e-8) -> list[tuple[LinearConstraint, float]]:
        """Constraints (and nonnegativity) violated by more than ``tol``."""
        bad = []
        for c in self.constraints:
            gap = c.lhs(assignment) - c.rhs
            if gap < -tol:
                bad.append((c, gap))
        for v in self.vars:
            x = assignment.get(v, 0.0)
            if x < -tol:
                bad.append((LinearConstraint({v: 1.0}, 0.0, f"{v.name} >= 0"), x))
        return bad

    def contains(self, assignment: Mapping[RateVar, float], tol: float = 1e-8) -> bool:
        return not self.violations(assignment, tol)

    def __len__(self) -> int:
        return len(self.constraints)


Family = frozenset  # frozenset of sink-subset tuples


def _strict_supersets(K: tuple[int, ...], universe: Sequence[tuple[int, ...]]) -> list[tuple[int, ...]]:
    sk = set(K)
    return [L for L in universe if len(L) > len(K) and sk <= set(L)]


def is_superset_closed(family: Iterable[tuple[int, ...]], universe: Sequence[tuple[int, ...]]) -> bool:
    fam = set(family)
    return all(set(_strict_supersets(K, universe)) <= fam for K in fam)


def superset_closed_families(universe: Sequence[tuple[int, ...]], include_empty: bool = False) -> list[Family]:
    """All families within ``universe`` closed under taking supersets.

    Built by deciding subsets from largest to smallest: a subset may join only
    once every immediate superset already has, which is enough for closure.
    """
    order = sorted(universe, key=lambda K: (-len(K), K))
    parents = {K: [L for L in _strict_supersets(K, order) if len(L) == len(K) + 1] for K in order}
    out: list[Family] = []

    def grow(pos: int, chosen: frozenset):
        if pos == len(order):
            if chosen or include_empty:
                out.append(chosen)
            return
        K = order[pos]
        grow(pos + 1, chosen)
        if all(L in chosen for L in parents[K]):
            grow(pos + 1, chosen | {K})

    grow(0, frozenset())
    out.sort(key=lambda f: (len(f), sorted((-len(K), K) for K in f)))
    return out


def enumerate_qstar(ambient: Iterable[int]) -> list[Family]:
    """Nonempty superset-closed families over the nonempty subsets of ``ambient``."""
    ambient = sorted(set(ambient))
    if not ambient:
        raise ValueError("ambient sink set must be nonempty")
    return superset_closed_families(nonempty_subsets(ambient), include_empty=False)


def strict_supersets(K: tuple[int, ...], ambient: Iterable[int]) -> list[tuple[int, ...]]:
    """Subsets of ``ambient`` strictly containing K."""
    return _strict_supersets(K, nonempty_subsets(ambient))
