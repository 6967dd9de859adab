"""Achievable DIR region with helpers for a user-supplied auxiliary pmf.

Variables, for every source i and nonempty sink subset K:

* ``R_{i,K}``   packet rate,
* ``R'_{i,K}``  codebook rate of U_{i,K},
* ``R''_{i,K}`` bin rate of the U_{i,K} codebook,
* ``R~_{i,K}``  power-binning rate of X_i (only for K within Pi_i).

The region lives in this lifted space; minimising a cost that only weights
the packet rates projects it implicitly.
"""

from __future__ import annotations

from itertools import product

from ..netgraph import DemandMap, nonempty_subsets
from ..probkit import JointPmf, cond_entropy, validate_markov
from .core import RateRegion, RateVar, enumerate_qstar, strict_supersets, superset_closed_families


class MarkovViolation(ValueError):
    pass


class _Aux:
    """Lookup of U_{i,K} positions; absent auxiliaries are constants."""

    def __init__(self, pmf: JointPmf, sources, sinks):
        self.pmf = pmf
        self.sinks = sinks
        self.pos = {}
        known = set(sinks)
        for aux, p in pmf.auxiliaries().items():
            if aux.source not in sources or not aux.sinks <= known:
                raise ValueError(f"auxiliary {pmf.variables[p].name!r} has invalid label {aux}")
            self.pos[(aux.source, tuple(sorted(aux.sinks)))] = p

    def of(self, i, Ks) -> list[int]:
        return [self.pos[(i, K)] for K in Ks if (i, K) in self.pos]

    def H(self, target: list[int], given: list[int]) -> float:
        if not target:
            return 0.0
        return cond_entropy(self.pmf, target, given)

    def chain_term(self, i: int, K: tuple[int, ...]) -> float:
        """H(U_{i,K} | {U_i} over strict supersets of K)."""
        return self.H(self.of(i, [K]), self.of(i, strict_supersets(K, self.sinks)))


def alpha(aux: _Aux, i: int, Q) -> float:
    x = [aux.pmf.source_position(i)]
    return -aux.H(aux.of(i, Q), x) + sum(aux.chain_term(i, K) for K in Q)


def beta(aux: _Aux, Qs: dict[int, frozenset], Qcs: dict[int, list]) -> float:
    inside = [p for i, Q in Qs.items() for p in aux.of(i, Q)]
    outside = [p for i, Qc in Qcs.items() for p in aux.of(i, Qc)]
    return aux.H(outside, inside) - sum(aux.chain_term(i, K) for i, Qc in Qcs.items() for K in Qc)


def gamma(aux: _Aux, demands: DemandMap, k: int, Gamma) -> float:
    pmf = aux.pmf
    rest = sorted(demands.sigma[k] - set(Gamma))
    U = [p for i in demands.sources for p in aux.of(i, [K for K in nonempty_subsets(aux.sinks) if k in K])]
    return aux.H([pmf.source_position(i) for i in Gamma], [pmf.source_position(i) for i in rest] + U)


def _fam(Q) -> str:
    return "{" + ",".join("".join(map(str, K)) for K in sorted(Q, key=lambda K: (-len(K), K))) + "}"


def theorem1_region(pmf: JointPmf, demands: DemandMap, *, check_markov: bool = True) -> RateRegion:
    sources = demands.sources
    sinks = demands.sinks
    for i in sources:
        pmf.source_position(i)
    aux = _Aux(pmf, set(sources), sinks)
    if check_markov:
        report = validate_markov(pmf, sinks)
        if not report.ok:
            raise MarkovViolation(str(report))

    subsets = nonempty_subsets(sinks)
    R = {(i, K): RateVar.packet(i, K) for i in sources for K in subsets}
    Rp = {(i, K): RateVar.prime(i, K) for i in sources for K in subsets}
    Rpp = {(i, K): RateVar.double(i, K) for i in sources for K in subsets}
    Rt = {(i, K): RateVar.tilde(i, K) for i in sources for K in nonempty_subsets(demands.pi[i])}
    region = RateRegion(
        list(R.values()) + list(Rp.values()) + list(Rpp.values()) + list(Rt.values()),
        provenance="theorem1",
    )

    # codebook covering at each encoder
    for i in sources:
        for Q in enumerate_qstar(sinks):
            region.add({Rp[i, K]: 1.0 for K in Q}, alpha(aux, i, Q), f"alpha(source {i}, {_fam(Q)})")

    # joint decoding of the stage-2 bins at each sink
    for k in sinks:
        Jk = [K for K in subsets if k in K]
        fams = superset_closed_families(Jk, include_empty=True)
        full = frozenset(Jk)
        for combo in product(fams, repeat=len(sources)):
            if all(Q == full for Q in combo):
                continue
            Qs = dict(zip(sources, combo))
            Qcs = {i: [K for K in Jk if K not in Q] for i, Q in Qs.items()}
            coeffs = {}
            for i, Qc in Qcs.items():
                for K in Qc:
                    coeffs[Rpp[i, K]] = 1.0
                    coeffs[Rp[i, K]] = -1.0
            label = "beta(sink %d, %s)" % (k, ", ".join(f"{i}:{_fam(Q)}" for i, Q in Qs.items()))
            region.add(coeffs, beta(aux, Qs, Qcs), label)

    # power binning of the requested sources
    for k in sinks:
        for Gamma in nonempty_subsets(demands.sigma[k]):
            coeffs = {Rt[i, K]: 1.0 for i in Gamma for K in nonempty_subsets(demands.pi[i]) if k in K}
            region.add(coeffs, gamma(aux, demands, k, Gamma), f"gamma(sink {k}, {set(Gamma)})")

    # packet rates carry both bin indices
    for (i, K), r in R.items():
        coeffs = {r: 1.0, Rpp[i, K]: -1.0}
        if (i, K) in Rt:
            coeffs[Rt[i, K]] = -1.0
        region.add(coeffs, 0.0, f"packet {i}:{'+'.join(map(str, K))}")
    return region
