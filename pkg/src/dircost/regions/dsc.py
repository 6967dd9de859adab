"""Slepian-Wolf type regions for the no-helpers case."""

from __future__ import annotations

from ..netgraph import DemandMap, nonempty_subsets
from ..probkit import JointPmf, cond_entropy
from .core import RateRegion, RateVar


def _xname(pmf: JointPmf, sources) -> str:
    return ",".join(pmf.variables[pmf.source_position(i)].name for i in sources)


def _sw_rhs(pmf: JointPmf, S, rest) -> tuple[float, str]:
    target = [pmf.source_position(i) for i in S]
    given = [pmf.source_position(i) for i in rest]
    h = cond_entropy(pmf, target, given)
    label = f"H({_xname(pmf, S)}|{_xname(pmf, rest)})" if rest else f"H({_xname(pmf, S)})"
    return h, label


def broadcast_region(pmf: JointPmf, demands: DemandMap) -> RateRegion:
    """One rate per source, delivered whole to every sink that requests it.

    For each sink j and nonempty S within Sigma_j:
    sum_{i in S} R_i >= H(X_S | X_{Sigma_j - S}).
    """
    requested = sorted(i for i in demands.sources if demands.pi[i])
    region = RateRegion([RateVar.broadcast(i) for i in requested], provenance="broadcast")
    for j in demands.sinks:
        sigma = demands.sigma[j]
        for S in nonempty_subsets(sigma):
            rest = sorted(sigma - set(S))
            h, label = _sw_rhs(pmf, S, rest)
            region.add({RateVar.broadcast(i): 1.0 for i in S}, h, f"sink {j}: {label}")
    return region


def power_binning_region(pmf: JointPmf, demands: DemandMap) -> RateRegion:
    """Complete no-helpers DIR region achieved by power binning.

    For each sink j and nonempty S within Sigma_j, the packets of sources in S
    that reach j (sink sets K within Pi_i with j in K) carry at least
    H(X_S | X_{Sigma_j - S}).
    """
    packets = [RateVar.packet(i, K) for i in demands.sources for K in nonempty_subsets(demands.pi[i])]
    region = RateRegion(packets, provenance="power-binning")
    for j in demands.sinks:
        sigma = demands.sigma[j]
        for S in nonempty_subsets(sigma):
            rest = sorted(sigma - set(S))
            h, label = _sw_rhs(pmf, S, rest)
            coeffs = {v: 1.0 for v in packets if v.source in S and j in v.sinks}
            region.add(coeffs, h, f"sink {j}: {label}")
    return region
