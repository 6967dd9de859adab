"""Exact discrete probability engine.

Joint pmfs are stored as dense numpy tables (row-major over the declared
variable order) and every entropic quantity is an exact sum over the table.
All logarithms are base 2 and ``0 log 0 = 0``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Iterable, Sequence, Union

import numpy as np

if TYPE_CHECKING:
    from .netgraph import DemandMap

SUM_TOL = 1e-12
MI_CLAMP = 1e-12
MARKOV_TOL = 1e-9


@dataclass(frozen=True)
class Source:
    index: int

    def __str__(self) -> str:
        return f"source({self.index})"


@dataclass(frozen=True)
class Auxiliary:
    """Auxiliary variable U_{i,K} owned by source ``source``, sent to sinks ``sinks``."""

    source: int
    sinks: frozenset

    def __init__(self, source: int, sinks: Iterable[int]):
        object.__setattr__(self, "source", int(source))
        object.__setattr__(self, "sinks", frozenset(int(k) for k in sinks))

    def __str__(self) -> str:
        return f"aux({self.source},{{{','.join(map(str, sorted(self.sinks)))}}})"


Role = Union[Source, Auxiliary]


@dataclass(frozen=True)
class Variable:
    name: str
    role: Role
    size: int


VarRef = Union[int, str]
VarSubset = Sequence[VarRef]


class JointPmf:
    """Discrete joint distribution over named source and auxiliary variables."""

    def __init__(self, variables: Sequence[Variable], probs, *, tol: float = SUM_TOL):
        variables = tuple(variables)
        if not variables:
            raise ValueError("a joint pmf needs at least one variable")
        names = [v.name for v in variables]
        if len(set(names)) != len(names):
            raise ValueError(f"variable names must be unique: {names}")
        roles = [v.role for v in variables]
        if len(set(roles)) != len(roles):
            raise ValueError("each source / auxiliary role may appear at most once")
        for v in variables:
            if int(v.size) < 1:
                raise ValueError(f"alphabet size of {v.name!r} must be positive")
            if isinstance(v.role, Auxiliary) and not v.role.sinks:
                raise ValueError(f"auxiliary {v.name!r} has an empty sink set")
        sizes = tuple(int(v.size) for v in variables)
        flat = np.asarray(probs, dtype=float).ravel()
        if flat.size != int(np.prod(sizes)):
            raise ValueError(
                f"probs has length {flat.size}, expected {int(np.prod(sizes))} "
                f"(product of alphabet sizes {sizes})"
            )
        if not np.all(np.isfinite(flat)) or np.any(flat < 0):
            raise ValueError("probabilities must be finite and nonnegative")
        total = float(flat.sum())
        if abs(total - 1.0) > tol:
            raise ValueError(f"probabilities must sum to 1 (got {total!r})")
        self.variables = variables
        self.sizes = sizes
        self._table = flat.reshape(sizes)
        self._table.setflags(write=False)
        self._hcache: dict[tuple[int, ...], float] = {}

    # -- construction helpers -------------------------------------------------

    @classmethod
    def from_table(cls, variables: Sequence[Variable], table) -> "JointPmf":
        return cls(variables, np.asarray(table, dtype=float).ravel())

    @property
    def table(self) -> np.ndarray:
        return self._table

    @property
    def probs(self) -> np.ndarray:
        return self._table.ravel()

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(v.name for v in self.variables)

    def __len__(self) -> int:
        return len(self.variables)

    def __repr__(self) -> str:
        vs = ", ".join(f"{v.name}:{v.size}" for v in self.variables)
        return f"JointPmf({vs})"

    def index(self, ref: VarRef) -> int:
        if isinstance(ref, str):
            try:
                return self.names.index(ref)
            except ValueError:
                raise KeyError(f"unknown variable {ref!r}") from None
        i = int(ref)
        if not 0 <= i < len(self.variables):
            raise IndexError(f"variable index {i} out of range")
        return i

    def resolve(self, subset: VarSubset) -> tuple[int, ...]:
        """Map names/positions to a sorted, duplicate-free tuple of positions."""
        idx = [self.index(r) for r in subset]
        if len(set(idx)) != len(idx):
            raise ValueError(f"duplicate variables in subset {list(subset)}")
        return tuple(sorted(idx))

    def source_position(self, i: int) -> int:
        for pos, v in enumerate(self.variables):
            if v.role == Source(i):
                return pos
        raise KeyError(f"no variable for source {i}")

    def aux_position(self, i: int, sinks: Iterable[int]) -> int | None:
        """Position of U_{i,K}, or None when absent (treated as a constant)."""
        role = Auxiliary(i, sinks)
        for pos, v in enumerate(self.variables):
            if v.role == role:
                return pos
        return None

    def sources(self) -> dict[int, int]:
        return {v.role.index: p for p, v in enumerate(self.variables) if isinstance(v.role, Source)}

    def auxiliaries(self) -> dict[Auxiliary, int]:
        return {v.role: p for p, v in enumerate(self.variables) if isinstance(v.role, Auxiliary)}

    def marginal_table(self, keep: Sequence[int]) -> np.ndarray:
        """Marginal over sorted positions ``keep``, axes in that order."""
        drop = tuple(a for a in range(self._table.ndim) if a not in keep)
        return self._table.sum(axis=drop) if drop else self._table

    def entropy_of(self, positions: tuple[int, ...]) -> float:
        if not positions:
            return 0.0
        h = self._hcache.get(positions)
        if h is None:
            p = self.marginal_table(positions).ravel()
            p = p[p > 0]
            h = float(-(p * np.log2(p)).sum())
            self._hcache[positions] = h
        return h

    def with_channel(self, parent: VarRef, kernel, name: str, role: Role) -> "JointPmf":
        """Append a variable generated from ``parent`` alone through ``kernel``.

        ``kernel[a, b] = P(new = b | parent = a)``; the new variable is
        conditionally independent of everything else given the parent.
        """
        p = self.index(parent)
        kernel = np.asarray(kernel, dtype=float)
        if kernel.ndim != 2 or kernel.shape[0] != self.sizes[p]:
            raise ValueError("kernel must have shape (parent alphabet, new alphabet)")
        if np.any(kernel < 0) or not np.allclose(kernel.sum(axis=1), 1.0, atol=1e-12):
            raise ValueError("kernel rows must be probability vectors")
        shape = [1] * len(self.sizes) + [kernel.shape[1]]
        shape[p] = kernel.shape[0]
        table = self._table[..., None] * kernel.reshape(shape)
        var = Variable(name, role, kernel.shape[1])
        return JointPmf(self.variables + (var,), table.ravel())


def bsc_kernel(p: float) -> np.ndarray:
    _check_prob(p, "p")
    return np.array([[1.0 - p, p], [p, 1.0 - p]])


def dsbs_star(p1: float, p2: float, *, names=("X0", "X1", "X2")) -> JointPmf:
    """X0 ~ Bern(1/2); X1 and X2 are X0 through independent BSC(p1), BSC(p2).

    Sources are labelled 0, 1, 2 in that order.
    """
    x0 = JointPmf([Variable(names[0], Source(0), 2)], [0.5, 0.5])
    return x0.with_channel(0, bsc_kernel(p1), names[1], Source(1)).with_channel(
        0, bsc_kernel(p2), names[2], Source(2)
    )


# -- operations ---------------------------------------------------------------


def marginalize(pmf: JointPmf, keep: VarSubset) -> JointPmf:
    positions = pmf.resolve(keep)
    if not positions:
        raise ValueError("keep set must be nonempty")
    table = pmf.marginal_table(positions)
    return JointPmf([pmf.variables[i] for i in positions], table.ravel())


def entropy(pmf: JointPmf, subset: VarSubset) -> float:
    return pmf.entropy_of(pmf.resolve(subset))


def cond_entropy(pmf: JointPmf, target: VarSubset, given: VarSubset = ()) -> float:
    """H(target | given) in bits."""
    t = pmf.resolve(target)
    g = pmf.resolve(given)
    if not t:
        raise ValueError("target must be nonempty")
    if set(t) & set(g):
        raise ValueError("target and given overlap")
    h = pmf.entropy_of(tuple(sorted(t + g))) - pmf.entropy_of(g)
    return max(h, 0.0)


def mutual_info(pmf: JointPmf, a: VarSubset, b: VarSubset, given: VarSubset = ()) -> float:
    """I(a; b | given) in bits, clamped at 0 against cancellation noise."""
    ia, ib, ig = pmf.resolve(a), pmf.resolve(b), pmf.resolve(given)
    if set(ia) & set(ib) or set(ia) & set(ig) or set(ib) & set(ig):
        raise ValueError("a, b and given must be pairwise disjoint")
    h = pmf.entropy_of
    val = (
        h(tuple(sorted(ia + ig)))
        + h(tuple(sorted(ib + ig)))
        - h(tuple(sorted(ia + ib + ig)))
        - h(ig)
    )
    if val < -MI_CLAMP:
        # exact arithmetic cannot produce this; it means a bug, not noise
        raise ArithmeticError(f"negative mutual information {val}")
    return max(val, 0.0)


def _check_prob(p: float, name: str) -> None:
    if not (0.0 <= p <= 1.0):
        raise ValueError(f"{name}={p!r} is not a probability")


def hb(p: float) -> float:
    """Binary entropy in bits."""
    _check_prob(p, "p")
    if p == 0.0 or p == 1.0:
        return 0.0
    return float(-p * np.log2(p) - (1.0 - p) * np.log2(1.0 - p))


def bsc_convolve(p: float, q: float) -> float:
    """Crossover probability of BSC(p) followed by BSC(q)."""
    _check_prob(p, "p")
    _check_prob(q, "q")
    return p * (1.0 - q) + q * (1.0 - p)


def solve_crossover(p_base: float, target_entropy: float, *, tol: float = 1e-13) -> float:
    """Find x in [0, 1/2] with hb(bsc_convolve(p_base, x)) == target_entropy.

    Bisection: |bsc_convolve(p, x) - 1/2| = |p - 1/2| (1 - 2x) shrinks
    monotonically in x, so hb of it increases monotonically.
    """
    _check_prob(p_base, "p_base")
    lo_h = hb(p_base)
    if not (lo_h - 1e-12 <= target_entropy <= 1.0 + 1e-12):
        raise ValueError(
            f"target entropy {target_entropy!r} outside [hb(p_base)={lo_h!r}, 1]"
        )
    if target_entropy <= lo_h:
        return 0.0
    if target_entropy >= 1.0:
        return 0.5
    lo, hi = 0.0, 0.5
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if hb(bsc_convolve(p_base, mid)) < target_entropy:
            lo = mid
        else:
            hi = mid
        if hi - lo < tol:
            break
    return 0.5 * (lo + hi)


@dataclass
class MarkovReport:
    ok: bool
    max_violation: float = 0.0
    sink: int | None = None
    entry: dict[str, int] = field(default_factory=dict)
    joint: float = 0.0
    factored: float = 0.0

    def __str__(self) -> str:
        if self.ok:
            return f"Markov condition holds (max deviation {self.max_violation:.3g})"
        return (
            f"Markov condition violated at sink {self.sink}: entry {self.entry} "
            f"has P={self.joint:.12g} but the factorisation gives {self.factored:.12g}"
        )


def validate_markov(
    pmf: JointPmf, demands: "DemandMap | Iterable[int]", *, tol: float = MARKOV_TOL
) -> MarkovReport:
    """Check P(X, U_J(j)) = P(X) prod_i P(U_{i,J(j)} | X_i) for every sink j.

    U_J(j) is the set of auxiliaries whose sink set contains j.
    """
    sinks = sorted(getattr(demands, "sinks", demands))
    src_pos = pmf.sources()
    for aux in pmf.auxiliaries():
        if aux.source not in src_pos:
            raise ValueError(f"auxiliary {aux} refers to a source absent from the pmf")
        if not aux.sinks <= set(sinks):
            raise ValueError(f"auxiliary {aux} refers to unknown sinks")
    src_order = sorted(src_pos)
    worst = MarkovReport(ok=True)
    for j in sinks:
        groups = {
            i: sorted(p for a, p in pmf.auxiliaries().items() if a.source == i and j in a.sinks)
            for i in src_order
        }
        aux_positions = [p for i in src_order for p in groups[i]]
        if not aux_positions:
            continue
        keep = [src_pos[i] for i in src_order] + aux_positions
        order = sorted(keep)
        joint = pmf.marginal_table(tuple(order))
        # reorder axes to (sources..., aux grouped by source)
        joint = np.transpose(joint, [order.index(p) for p in keep])
        n_src = len(src_order)
        px = joint.sum(axis=tuple(range(n_src, joint.ndim)), keepdims=True)
        factored = px.copy()
        offset = n_src
        for si, i in enumerate(src_order):
            g = groups[i]
            if g:
                own = (si,) + tuple(range(offset, offset + len(g)))
                other = tuple(a for a in range(joint.ndim) if a not in own)
                pxu = joint.sum(axis=other, keepdims=True)
                pxi = pxu.sum(axis=tuple(range(offset, offset + len(g))), keepdims=True)
                with np.errstate(divide="ignore", invalid="ignore"):
                    cond = np.where(pxi > 0, pxu / np.where(pxi > 0, pxi, 1.0), 0.0)
                factored = factored * cond
            offset += len(g)
        diff = np.abs(joint - factored)
        k = int(np.argmax(diff))
        dev = float(diff.ravel()[k])
        if dev > worst.max_violation:
            idx = np.unravel_index(k, diff.shape)
            entry = {pmf.variables[p].name: int(v) for p, v in zip(keep, idx)}
            worst = MarkovReport(
                ok=True,
                max_violation=dev,
                sink=j,
                entry=entry,
                joint=float(joint[idx]),
                factored=float(factored[idx]),
            )
    worst.ok = worst.max_violation <= tol
    return worst
