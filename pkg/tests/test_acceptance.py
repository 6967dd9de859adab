"""Acceptance criteria; each test prints one PASS/FAIL line."""

import itertools
import time
from contextlib import contextmanager

import numpy as np

from dircost.binsim import BinSimConfig, run_power_binning
from dircost.lpsolve import LinearProgram, minimize, vertex_oracle
from dircost.netgraph import DemandMap, Edge, Network, Node, PacketId, broadcast_costs, effective_costs, nonempty_subsets, steiner_weight
from dircost.probkit import (
    Auxiliary,
    JointPmf,
    Source,
    Variable,
    bsc_convolve,
    cond_entropy,
    dsbs_star,
    entropy,
    hb,
    mutual_info,
)
from dircost.regions import (
    RateVar,
    broadcast_region,
    enumerate_qstar,
    helper_analytic,
    helper_broadcast_region,
    helper_region,
    is_superset_closed,
    power_binning_region,
    theorem1_region,
)
from dircost.regions.core import RateRegion
from dircost.regions.helper import DEFAULT_WEIGHTS, R02, R11, R012, R22
from oracles import (
    closure_families_bruteforce,
    random_connected_graph,
    random_feasible_lp,
    random_pmf_probs,
    steiner_bruteforce,
)


@contextmanager
def criterion(capsys, number, title, limit):
    start = time.perf_counter()
    ok, detail = False, ""
    try:
        yield
        elapsed = time.perf_counter() - start
        ok = elapsed < limit
        detail = f"{elapsed:.2f}s (limit {limit}s)"
        assert ok, f"runtime {elapsed:.2f}s exceeds {limit}s"
    except Exception as exc:
        detail = detail or str(exc).splitlines()[0]
        raise
    finally:
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {number}: {title} -- {detail}")


def two_sink_network(w0=1.0, w1=1.0, w2=1.0, w11=0.0, w22=0.0):
    nodes = [Node("E0", "source", 0), Node("E1", "source", 1), Node("E2", "source", 2),
             Node("C"), Node("S1", "sink", 1), Node("S2", "sink", 2)]
    edges = [Edge("E0", "C", w0), Edge("C", "S1", w1), Edge("C", "S2", w2), Edge("E1", "S1", w11), Edge("E2", "S2", w22)]
    return Network(nodes, edges)


TWO_SINK = DemandMap({1: [0, 1], 2: [0, 2]})


def test_criterion_1_broadcast_vs_dir_gap(capsys):
    with criterion(capsys, 1, "broadcast vs DIR gap on the two-sink network", 1.0):
        pmf, net = dsbs_star(0.1, 0.2), two_sink_network()
        b = minimize(LinearProgram(broadcast_region(pmf, TWO_SINK), {RateVar.broadcast(i): w for i, w in broadcast_costs(net, TWO_SINK).items()}))
        d = minimize(LinearProgram(power_binning_region(pmf, TWO_SINK),
                                   {RateVar.of(p): w for p, w in effective_costs(net, TWO_SINK, restrict_no_helpers=True).items()}))
        h1, h2 = hb(0.1), hb(0.2)
        assert abs(b.value - 3 * h2) < 1e-8
        assert abs(d.value - (3 * h1 + 2 * (h2 - h1))) < 1e-8
        assert d.value < b.value


def test_criterion_2_side_info_vertex(capsys):
    with criterion(capsys, 2, "side-information optimum lands on P2 or P3", 5.0):
        rng = np.random.default_rng(2)
        for _ in range(20):
            p1, p2 = rng.uniform(0.01, 0.49, size=2)
            w0, w1, w2 = rng.uniform(0.1, 5.0, size=3)
            pmf = dsbs_star(p1, p2)
            net = two_sink_network(w0, w1, w2, 0.0, 0.0)
            eff = effective_costs(net, TWO_SINK, restrict_no_helpers=True)
            sol = minimize(LinearProgram(power_binning_region(pmf, TWO_SINK), {RateVar.of(p): w for p, w in eff.items()}))
            a = cond_entropy(pmf, ["X0"], ["X1"])
            c = cond_entropy(pmf, ["X0"], ["X2"])
            if a <= c:
                point = (0.0, a, c - a)  # P2
            else:
                point = (a - c, c, 0.0)  # P3
            got = tuple(sol.assignment[v] for v in (RateVar.packet(0, [1]), RateVar.packet(0, [1, 2]), RateVar.packet(0, [2])))
            assert np.allclose(got, point, rtol=0, atol=1e-8), (p1, p2, got, point)


def _random_demands(rng):
    N, M = int(rng.integers(1, 4)), int(rng.integers(1, 3))
    sigma = {j: sorted(int(i) for i in rng.choice(N, size=int(rng.integers(1, N + 1)), replace=False)) for j in range(1, M + 1)}
    return DemandMap(sigma, sources=range(N))


def test_criterion_3_aux_region_constant(capsys):
    with criterion(capsys, 3, "power-binning region equals the auxiliary region with constant auxiliaries", 30.0):
        rng = np.random.default_rng(3)
        for _ in range(8):
            d = _random_demands(rng)
            sizes = [int(s) for s in rng.integers(2, 4, size=len(d.sources))]
            pmf = JointPmf([Variable(f"X{i}", Source(i), s) for i, s in zip(d.sources, sizes)], random_pmf_probs(rng, sizes))
            aux = pmf
            for i in d.sources:
                for K in nonempty_subsets(d.sinks):
                    aux = aux.with_channel(f"X{i}", np.ones((sizes[i], 1)), f"U{i}_{K}", Auxiliary(i, K))
            pb = power_binning_region(pmf, d)
            t1 = theorem1_region(aux, d)
            packets = [v for v in t1.vars if v.kind == "packet"]
            for _ in range(20):
                w = {v: float(rng.uniform(0.0, 5.0)) for v in packets}
                v1 = minimize(LinearProgram(t1, w)).value
                v2 = minimize(LinearProgram(pb, {v: w[v] for v in pb.vars})).value
                assert abs(v1 - v2) < 1e-8, (d, v1, v2)


def test_criterion_4_helper_example(capsys):
    with criterion(capsys, 4, "two-sink helper example beats broadcast", 1.0):
        p1, p2, delta = 0.1, 0.2, 0.1
        opt = helper_analytic(p1, p2, delta)
        for p, p0 in ((p1, opt.p01), (p2, opt.p02)):
            assert abs(hb(bsc_convolve(p, p0)) - (hb(p) + delta)) < 1e-10
        # the private packet goes to the sink with the smaller crossover (see ledger)
        fine = opt.aux.fine_sink
        p_fine, p_coarse = min(opt.p01, opt.p02), max(opt.p01, opt.p02)
        point = {R012: 1 - hb(p_coarse), RateVar.packet(0, [fine]): hb(p_coarse) - hb(p_fine),
                 RateVar.packet(0, [3 - fine]): 0.0,
                 R11: hb(bsc_convolve(p1, opt.p01)), R22: hb(bsc_convolve(p2, opt.p02))}
        region = helper_region(p1, p2, opt.aux)
        assert region.contains(point, tol=1e-9)
        rhs = {next(iter(c.coeffs)): c.rhs for c in region.constraints}
        assert abs(rhs[R012] - point[R012]) < 1e-9
        assert abs(rhs[RateVar.packet(0, [fine])] - point[RateVar.packet(0, [fine])]) < 1e-9
        # literal orientation: p1 > p2 gives R_{0,12} = 1 - H_b(p01), R_{0,2} = H_b(p01) - H_b(p02)
        lit = helper_analytic(0.2, 0.1, delta)
        lit_rhs = {next(iter(c.coeffs)): c.rhs for c in helper_region(0.2, 0.1, lit.aux).constraints}
        assert abs(lit_rhs[R012] - (1 - hb(lit.p01))) < 1e-9
        assert abs(lit_rhs[R02] - (hb(lit.p01) - hb(lit.p02))) < 1e-9
        # cost comparison on the unit network: helper DIR vs one broadcast helper stream
        w = {**DEFAULT_WEIGHTS, R11: 1.0, R22: 1.0}
        dir_cost = minimize(LinearProgram(region, w)).value
        b_region = helper_broadcast_region(p1, p2, min(opt.p01, opt.p02))
        b_cost = minimize(LinearProgram(b_region, {R012: 3.0, R11: 1.0, R22: 1.0})).value
        assert dir_cost < b_cost
        assert abs(opt.broadcast_rate - (1 - hb(min(opt.p01, opt.p02)))) < 1e-12


def test_criterion_5_lp_vs_vertex_oracle(capsys):
    with criterion(capsys, 5, "simplex agrees with vertex enumeration on 100 LPs", 10.0):
        rng = np.random.default_rng(5)
        for _ in range(100):
            n, m = int(rng.integers(1, 7)), int(rng.integers(1, 21))
            A, b, c = random_feasible_lp(rng, n, m)
            vs = [RateVar.packet(0, [k + 1]) for k in range(n)]
            r = RateRegion(vs)
            for row, rhs in zip(A, b):
                r.add(dict(zip(vs, row)), rhs)
            lp = LinearProgram(r, dict(zip(vs, c)))
            s, o = minimize(lp), vertex_oracle(lp)
            assert s.optimal and o.optimal
            assert abs(s.value - o.value) < 1e-7


def test_criterion_6_steiner_exact(capsys):
    with criterion(capsys, 6, "Steiner weights match brute-force subgraph enumeration", 10.0):
        rng = np.random.default_rng(6)
        for _ in range(25):
            n = int(rng.integers(3, 9))
            edges = random_connected_graph(rng, n, int(rng.integers(n - 1, 11)))
            k = int(rng.integers(2, 4))  # terminals including the root
            terms = [int(t) for t in rng.choice(n, size=k, replace=False)]
            nodes = [Node(str(v), "source", 0) if v == terms[0] else
                     Node(str(v), "sink", terms.index(v)) if v in terms else Node(str(v)) for v in range(n)]
            net = Network(nodes, [Edge(str(u), str(v), w) for u, v, w in edges])
            assert steiner_weight(net, 0, range(1, k)) == steiner_bruteforce(n, edges, terms)


SEED = 20240601


def test_criterion_7_binning_threshold(capsys):
    with criterion(capsys, 7, "binning error falls with n above threshold, stays high below", 120.0):
        p1, p2, trials = 0.1, 0.2, 10_000

        def err(n, offset):
            rates = {PacketId(0, [1, 2]): hb(p1) + offset, PacketId(0, [2]): hb(p2) - hb(p1)}
            rep = run_power_binning(BinSimConfig.dsbs(p1, p2, n, rates, trials, SEED))
            return rep.average

        above8, above16, below16 = err(8, 0.15), err(16, 0.15), err(16, -0.15)
        with capsys.disabled():
            print(f"\n    error(n=8, +0.15)={above8:.4f} error(n=16, +0.15)={above16:.4f} error(n=16, -0.15)={below16:.4f}")
        assert above16 < above8
        assert below16 > 0.4


def test_criterion_8_entropy_properties(capsys):
    with criterion(capsys, 8, "entropy engine identities on 200 random pmfs", 10.0):
        rng = np.random.default_rng(8)
        for _ in range(200):
            nv = int(rng.integers(2, 5))
            sizes = [int(s) for s in rng.integers(1, 4, size=nv)]
            pmf = JointPmf([Variable(f"V{k}", Source(k), s) for k, s in enumerate(sizes)], random_pmf_probs(rng, sizes, zero_frac=0.2))
            idx = list(range(nv))
            for a, b in itertools.permutations(idx, 2):
                rest = [k for k in idx if k not in (a, b)]
                assert abs(entropy(pmf, [a, b]) - entropy(pmf, [a]) - cond_entropy(pmf, [b], [a])) < 1e-9
                assert cond_entropy(pmf, [a], [b]) <= entropy(pmf, [a]) + 1e-9
                if rest:
                    assert cond_entropy(pmf, [a], [b] + rest) <= cond_entropy(pmf, [a], [b]) + 1e-9
                    assert mutual_info(pmf, [a], [b], rest) >= 0.0
                assert mutual_info(pmf, [a], [b]) >= 0.0
            # full chain rule
            chain = sum(cond_entropy(pmf, [k], idx[:k]) for k in idx)
            assert abs(chain - entropy(pmf, idx)) < 1e-9


def test_criterion_9_qstar(capsys):
    with criterion(capsys, 9, "superset-closed family enumeration matches brute force", 1.0):
        counts = []
        for M in (1, 2, 3):
            fams = enumerate_qstar(range(1, M + 1))
            ref = closure_families_bruteforce(M)
            assert set(fams) == set(ref) and len(fams) == len(set(fams))
            assert all(is_superset_closed(f, nonempty_subsets(range(1, M + 1))) for f in fams)
            counts.append(len(ref))
        assert counts[:2] == [1, 4]
        with capsys.disabled():
            print(f"\n    counts by M: {counts}")
