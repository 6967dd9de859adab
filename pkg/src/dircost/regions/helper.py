"""Two sinks, one helper: sink j reconstructs X_j and source 0 only helps.

Source 0 sends R_{0,12} to both sinks and R_{0,1}, R_{0,2} to one sink each;
sources 1 and 2 send R_{1,1}, R_{2,2} to their own sink.  The achievable
region for auxiliaries (U0, U1, U2) with X_j - X0 - (U0, U1, U2) is

    R_{0,12} >= I(X0; U0)
    R_{0,j}  >= I(X0; Uj | U0)
    R_{j,j}  >= H(Xj | U0, Uj)          j = 1, 2

The binary-symmetric family used here: X1, X2 are X0 through BSC(p1),
BSC(p2); the "fine" private auxiliary is X0 through BSC(p_fine); U0 is that
auxiliary through a further BSC(p_cascade); the other private auxiliary is
constant.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..probkit import (
    Auxiliary,
    JointPmf,
    bsc_convolve,
    bsc_kernel,
    cond_entropy,
    dsbs_star,
    hb,
    mutual_info,
    solve_crossover,
)
from .core import RateRegion, RateVar

R012 = RateVar.packet(0, (1, 2))
R01 = RateVar.packet(0, (1,))
R02 = RateVar.packet(0, (2,))
R11 = RateVar.packet(1, (1,))
R22 = RateVar.packet(2, (2,))
HELPER_VARS = [R012, R01, R02, R11, R22]

# unit-weight collector network: E0 -> collector -> sinks
DEFAULT_WEIGHTS = {R012: 3.0, R01: 2.0, R02: 2.0}


@dataclass(frozen=True)
class HelperAux:
    p_fine: float
    p_cascade: float
    fine_sink: int = 2

    def __post_init__(self):
        for name in ("p_fine", "p_cascade"):
            p = getattr(self, name)
            if not 0.0 <= p <= 0.5:
                raise ValueError(f"{name}={p!r} must lie in [0, 1/2]")
        if self.fine_sink not in (1, 2):
            raise ValueError("fine_sink must be 1 or 2")

    @property
    def p_common(self) -> float:
        """Crossover from X0 to U0."""
        return bsc_convolve(self.p_fine, self.p_cascade)


def helper_pmf(p1: float, p2: float, aux: HelperAux) -> JointPmf:
    """Joint pmf of (X0, X1, X2, U_fine, U0); the other private aux is constant."""
    for name, p in (("p1", p1), ("p2", p2)):
        if not 0.0 <= p <= 0.5:
            raise ValueError(f"{name}={p!r} must lie in [0, 1/2]")
    j = aux.fine_sink
    pmf = dsbs_star(p1, p2)
    pmf = pmf.with_channel("X0", bsc_kernel(aux.p_fine), f"U{j}", Auxiliary(0, [j]))
    return pmf.with_channel(f"U{j}", bsc_kernel(aux.p_cascade), "U0", Auxiliary(0, [1, 2]))


def helper_region_from_pmf(pmf: JointPmf, *, tol: float = 1e-9) -> RateRegion:
    """The five constraints, evaluated on a pmf over X0, X1, X2 and auxiliaries.

    Auxiliaries are read from roles aux(0,{1,2}) -> U0, aux(0,{1}) -> U1,
    aux(0,{2}) -> U2; missing ones are constants.
    """
    x0, x1, x2 = (pmf.source_position(i) for i in (0, 1, 2))
    u0, u1, u2 = (pmf.aux_position(0, K) for K in ((1, 2), (1,), (2,)))
    U = [p for p in (u0, u1, u2) if p is not None]
    if U:
        for xj in (x1, x2):
            leak = mutual_info(pmf, [xj], U, [x0])
            if leak > tol:
                raise ValueError(f"auxiliaries are not conditionally independent of {pmf.variables[xj].name} given X0 (I={leak:.3g})")
    opt = lambda p: [p] if p is not None else []  # noqa: E731
    g0 = opt(u0)

    def I(a, b, given):
        return mutual_info(pmf, a, b, given) if b else 0.0

    region = RateRegion(list(HELPER_VARS), provenance="helper")
    region.add({R012: 1.0}, I([x0], g0, []), "I(X0;U0)")
    region.add({R01: 1.0}, I([x0], opt(u1), g0), "I(X0;U1|U0)")
    region.add({R02: 1.0}, I([x0], opt(u2), g0), "I(X0;U2|U0)")
    region.add({R11: 1.0}, cond_entropy(pmf, [x1], g0 + opt(u1)), "H(X1|U0,U1)")
    region.add({R22: 1.0}, cond_entropy(pmf, [x2], g0 + opt(u2)), "H(X2|U0,U2)")
    return region


def helper_region(p1: float, p2: float, aux: HelperAux) -> RateRegion:
    return helper_region_from_pmf(helper_pmf(p1, p2, aux))


def helper_broadcast_region(p1: float, p2: float, p0: float) -> RateRegion:
    """Broadcast counterpart: one helper stream U0 = X0 through BSC(p0) to both sinks."""
    pmf = dsbs_star(p1, p2).with_channel("X0", bsc_kernel(p0), "U0", Auxiliary(0, [1, 2]))
    x0, x1, x2, u0 = 0, 1, 2, 3
    region = RateRegion([R012, R11, R22], provenance="helper-broadcast")
    region.add({R012: 1.0}, mutual_info(pmf, [x0], [u0]), "I(X0;U0)")
    region.add({R11: 1.0}, cond_entropy(pmf, [x1], [u0]), "H(X1|U0)")
    region.add({R22: 1.0}, cond_entropy(pmf, [x2], [u0]), "H(X2|U0)")
    return region


@dataclass
class HelperOptimum:
    p01: float
    p02: float
    aux: HelperAux
    rates: dict[RateVar, float]
    broadcast_rate: float

    @property
    def common_rate(self) -> float:
        return self.rates[R012]

    @property
    def private_rate(self) -> float:
        return self.rates[RateVar.packet(0, (self.aux.fine_sink,))]


def helper_analytic(p1: float, p2: float, delta: float) -> HelperOptimum:
    """Auxiliary choice meeting both sinks' budgets H_b(p_j) + delta exactly.

    p0j solves H_b(p_j * p0j) = H_b(p_j) + delta.  The sink needing the less
    noisy helper description (smaller p0j) gets the private packet.
    """
    if delta < 0:
        raise ValueError("delta must be nonnegative: sinks cannot decode below H(X_j|X0)")
    p01 = solve_crossover(p1, min(hb(p1) + delta, 1.0))
    p02 = solve_crossover(p2, min(hb(p2) + delta, 1.0))
    fine_sink = 2 if p02 <= p01 else 1
    p_fine, p_coarse = min(p01, p02), max(p01, p02)
    p_cascade = 0.0 if p_fine >= 0.5 else (p_coarse - p_fine) / (1.0 - 2.0 * p_fine)
    aux = HelperAux(p_fine, min(max(p_cascade, 0.0), 0.5), fine_sink)
    other = 3 - fine_sink
    rates = {
        R012: 1.0 - hb(p_coarse),
        RateVar.packet(0, (fine_sink,)): hb(p_coarse) - hb(p_fine),
        RateVar.packet(0, (other,)): 0.0,
        R11: hb(bsc_convolve(p1, p01)),
        R22: hb(bsc_convolve(p2, p02)),
    }
    return HelperOptimum(p01, p02, aux, rates, broadcast_rate=max(1.0 - hb(p01), 1.0 - hb(p02)))


@dataclass
class HelperSweepResult:
    aux: HelperAux
    rates: dict[RateVar, float]
    cost: float
    grid_steps: int


def _hb_vec(p: np.ndarray) -> np.ndarray:
    p = np.clip(p, 0.0, 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        h = -p * np.log2(p) - (1 - p) * np.log2(1 - p)
    return np.nan_to_num(h, nan=0.0)


def _sweep_cost(pf, pc, fine, ps, budgets, w):
    other = 3 - fine
    pcommon = pf * (1 - pc) + pc * (1 - pf)
    r012 = 1.0 - _hb_vec(pcommon)
    rfine = np.maximum(_hb_vec(pcommon) - _hb_vec(pf), 0.0)
    r_fine_sink = _hb_vec(ps[fine] * (1 - pf) + pf * (1 - ps[fine]))
    r_other_sink = _hb_vec(ps[other] * (1 - pcommon) + pcommon * (1 - ps[other]))
    ok = (r_fine_sink <= budgets[fine] + 1e-12) & (r_other_sink <= budgets[other] + 1e-12)
    return np.where(ok, w[R012] * r012 + w[RateVar.packet(0, (fine,))] * rfine, np.inf)


def helper_sweep(
    p1: float,
    p2: float,
    delta: float,
    grid_steps: int,
    weights: dict[RateVar, float] | None = None,
    refine: int = 3,
) -> HelperSweepResult:
    """Grid search over (p_fine, p_cascade) and both orientations.

    Minimises the weighted helper rate subject to R_{j,j} <= H_b(p_j) + delta,
    with rates taken at the region's corner point.  After the coarse pass,
    ``refine`` further passes re-grid the two cells around the incumbent with
    the same number of steps, so the answer stays inside the coarse cell of
    the best coarse point.
    """
    if not (0 < p1 < 0.5 and 0 < p2 < 0.5):
        raise ValueError("p1 and p2 must lie strictly between 0 and 1/2")
    if delta < 0:
        raise ValueError("delta must be nonnegative: sinks cannot decode below H(X_j|X0)")
    if grid_steps < 1:
        raise ValueError("grid_steps must be positive")
    if refine < 0:
        raise ValueError("refine must be nonnegative")
    w = {**DEFAULT_WEIGHTS, **(weights or {})}
    budgets = {1: hb(p1) + delta, 2: hb(p2) + delta}
    ps = {1: p1, 2: p2}
    best = None
    for fine in (2, 1):
        lo_f, hi_f, lo_c, hi_c = 0.0, 0.5, 0.0, 0.5
        found = None
        for _ in range(refine + 1):
            gf = np.linspace(lo_f, hi_f, grid_steps + 1)
            gc = np.linspace(lo_c, hi_c, grid_steps + 1)
            pf, pc = np.meshgrid(gf, gc, indexing="ij")
            cost = _sweep_cost(pf, pc, fine, ps, budgets, w)
            k = np.unravel_index(int(np.argmin(cost)), cost.shape)
            if not np.isfinite(cost[k]):
                break
            if found is None or cost[k] <= found[0]:
                found = (float(cost[k]), float(pf[k]), float(pc[k]))
            step_f, step_c = gf[1] - gf[0], gc[1] - gc[0]
            lo_f, hi_f = max(found[1] - step_f, 0.0), min(found[1] + step_f, 0.5)
            lo_c, hi_c = max(found[2] - step_c, 0.0), min(found[2] + step_c, 0.5)
        if found is not None and (best is None or found[0] < best[0] - 1e-15):
            best = (found[0], fine, found[1], found[2])
    if best is None:
        raise ValueError("no grid point meets the sink budgets")
    cost, fine, a, b = best
    aux = HelperAux(a, b, fine)
    region = helper_region(p1, p2, aux)
    rates = {c_var: c.rhs for c in region.constraints for c_var in c.coeffs}
    return HelperSweepResult(aux, rates, cost, grid_steps)
