import numpy as np
import pytest

from dircost.lpsolve import LinearProgram, minimize
from dircost.netgraph import DemandMap, nonempty_subsets
from dircost.probkit import (
    Auxiliary,
    JointPmf,
    Source,
    Variable,
    bsc_convolve,
    bsc_kernel,
    dsbs_star,
    hb,
)
from dircost.regions import (
    HelperAux,
    MarkovViolation,
    RateVar,
    broadcast_region,
    enumerate_qstar,
    helper_analytic,
    helper_pmf,
    helper_region,
    helper_region_from_pmf,
    helper_sweep,
    is_superset_closed,
    power_binning_region,
    superset_closed_families,
    theorem1_region,
)
from dircost.regions.core import LinearConstraint, RateRegion
from dircost.regions.helper import R01, R02, R11, R012, R22
from oracles import closure_families_bruteforce, hb_ref, random_pmf_probs

TWO_SINK = DemandMap({1: [0, 1], 2: [0, 2]})


class TestRateVar:
    def test_names_roundtrip(self):
        for v in [RateVar.packet(0, [2, 1]), RateVar.prime(1, [1]), RateVar.double(2, [1, 2]), RateVar.tilde(0, [2]), RateVar.broadcast(3)]:
            assert RateVar.parse(v.name) == v
        assert RateVar.packet(0, [2, 1]).name == "R_0_1+2"
        assert RateVar.prime(1, [1]).name == "Rp_1_1"

    def test_invalid(self):
        with pytest.raises(ValueError):
            RateVar("packet", 0)
        with pytest.raises(ValueError):
            RateVar.parse("Q_0_1")


class TestRegionContainer:
    def test_rejects_uncataloged(self):
        r = RateRegion([RateVar.packet(0, [1])])
        with pytest.raises(ValueError, match="uncataloged"):
            r.add({RateVar.packet(0, [2]): 1.0}, 0.0)

    def test_rejects_empty_and_nonfinite(self):
        with pytest.raises(ValueError):
            LinearConstraint({}, 1.0)
        with pytest.raises(ValueError):
            LinearConstraint({RateVar.packet(0, [1]): 1.0}, float("nan"))

    def test_violations(self):
        a, b = RateVar.packet(0, [1]), RateVar.packet(0, [2])
        r = RateRegion([a, b])
        r.add({a: 1.0, b: 1.0}, 1.0)
        assert r.contains({a: 0.5, b: 0.5})
        assert not r.contains({a: 0.5, b: 0.4})
        assert not r.contains({a: 1.5, b: -0.5})


class TestQstar:
    @pytest.mark.parametrize("M", [1, 2, 3])
    def test_matches_bruteforce(self, M):
        fams = enumerate_qstar(range(1, M + 1))
        ref = closure_families_bruteforce(M)
        assert set(fams) == set(ref) and len(fams) == len(ref)
        universe = nonempty_subsets(range(1, M + 1))
        assert all(is_superset_closed(f, universe) for f in fams)

    def test_small_counts(self):
        assert len(enumerate_qstar([1])) == 1
        assert len(enumerate_qstar([1, 2])) == 4

    def test_families_over_Jk(self):
        # sets containing sink 1 among {1,2}: {(1,), (1,2)}
        fams = superset_closed_families([(1,), (1, 2)], include_empty=True)
        assert fams == [frozenset(), frozenset({(1, 2)}), frozenset({(1, 2), (1,)})]

    def test_deterministic_order(self):
        assert enumerate_qstar([1, 2, 3]) == enumerate_qstar([3, 2, 1])


class TestDsc:
    def test_two_sink_power_binning_rows(self):
        pmf = dsbs_star(0.1, 0.2)
        r = power_binning_region(pmf, TWO_SINK)
        assert len(r) == 6
        h1, h2 = hb_ref(0.1), hb_ref(0.2)
        rows = {c.label: (c.coeffs, c.rhs) for c in r.constraints}
        coeffs, rhs = rows["sink 1: H(X0|X1)"]
        assert coeffs == {RateVar.packet(0, [1]): 1.0, RateVar.packet(0, [1, 2]): 1.0}
        assert rhs == pytest.approx(h1, abs=1e-12)
        assert rows["sink 2: H(X0,X2)"][1] == pytest.approx(1 + h2, abs=1e-12)
        assert rows["sink 1: H(X1|X0)"][1] == pytest.approx(h1, abs=1e-12)

    def test_constraint_count(self):
        rng = np.random.default_rng(2)
        for _ in range(10):
            N, M = int(rng.integers(1, 4)), int(rng.integers(1, 4))
            sigma = {j: list(rng.choice(N, size=int(rng.integers(1, N + 1)), replace=False)) for j in range(1, M + 1)}
            d = DemandMap(sigma, sources=range(N))
            pmf = JointPmf([Variable(f"X{i}", Source(i), 2) for i in range(N)], random_pmf_probs(rng, [2] * N))
            assert len(power_binning_region(pmf, d)) == sum(2 ** len(s) - 1 for s in d.sigma.values())
            assert len(broadcast_region(pmf, d)) == len(power_binning_region(pmf, d))

    def test_broadcast_rows(self):
        r = broadcast_region(dsbs_star(0.1, 0.2), TWO_SINK)
        assert r.vars == [RateVar.broadcast(i) for i in (0, 1, 2)]
        assert all(np.isfinite(c.rhs) and c.rhs >= 0 for c in r.constraints)


def _const_aux(pmf, demands):
    """Every (i, K) auxiliary present, each a constant."""
    out = pmf
    for i in demands.sources:
        for K in nonempty_subsets(demands.sinks):
            name = f"U{i}_{''.join(map(str, K))}"
            out = out.with_channel(pmf.source_position(i), np.ones((pmf.variables[pmf.source_position(i)].size, 1)), name, Auxiliary(i, K))
    return out


class TestAuxRegion:
    def test_two_sink_shape(self):
        r = theorem1_region(dsbs_star(0.1, 0.2), TWO_SINK)
        # alpha 3*4, beta 2*(3^3-1), gamma 3+3, linking 9
        assert len(r) == 12 + 52 + 6 + 9
        kinds = {}
        for v in r.vars:
            kinds[v.kind] = kinds.get(v.kind, 0) + 1
        assert kinds == {"packet": 9, "aux_prime": 9, "aux_double": 9, "aux_tilde": 5}

    def test_rhs_signs(self):
        pmf = helper_pmf(0.1, 0.2, helper_analytic(0.1, 0.2, 0.1).aux)
        r = theorem1_region(pmf, DemandMap({1: [1], 2: [2]}, sources=[0, 1, 2]))
        for c in r.constraints:
            assert np.isfinite(c.rhs)
            if c.label.startswith(("alpha", "gamma")):
                assert c.rhs >= -1e-12

    def test_constant_aux_collapses(self):
        pmf = _const_aux(dsbs_star(0.1, 0.2), TWO_SINK)
        r = theorem1_region(pmf, TWO_SINK)
        for c in r.constraints:
            if c.label.startswith(("alpha", "beta")):
                assert c.rhs == pytest.approx(0.0, abs=1e-12)

    def test_markov_violation(self):
        pmf = dsbs_star(0.1, 0.2).with_channel("X1", bsc_kernel(0.1), "U", Auxiliary(0, [1]))
        with pytest.raises(MarkovViolation):
            theorem1_region(pmf, TWO_SINK)

    def test_bad_aux_label(self):
        pmf = dsbs_star(0.1, 0.2).with_channel("X0", bsc_kernel(0.1), "U", Auxiliary(0, [3]))
        with pytest.raises(ValueError):
            theorem1_region(pmf, TWO_SINK, check_markov=False)

    def test_helper_aux_matches_helper_region(self):
        # with W_{0,12} > W_{0,j} the extra freedom of the lifted region is unused
        p1, p2, delta = 0.1, 0.2, 0.1
        aux = helper_analytic(p1, p2, delta).aux
        pmf = helper_pmf(p1, p2, aux)
        demands = DemandMap({1: [1], 2: [2]}, sources=[0, 1, 2])
        t1 = theorem1_region(pmf, demands)
        w = {R012: 3.0, R01: 2.0, R02: 2.0, R11: 1.0, R22: 1.0}
        v1 = minimize(LinearProgram(t1, w)).value
        v2 = minimize(LinearProgram(helper_region(p1, p2, aux), w)).value
        assert v1 == pytest.approx(v2, abs=1e-9)


class TestHelper:
    P1, P2, DELTA = 0.1, 0.2, 0.1

    def test_analytic_roots(self):
        opt = helper_analytic(self.P1, self.P2, self.DELTA)
        for p, p0 in ((self.P1, opt.p01), (self.P2, opt.p02)):
            assert abs(hb(bsc_convolve(p, p0)) - (hb(p) + self.DELTA)) < 1e-10
        assert opt.p01 < opt.p02
        assert opt.aux.fine_sink == 1
        assert opt.aux.p_common == pytest.approx(opt.p02, abs=1e-12)

    def test_region_tight_at_analytic_point(self):
        opt = helper_analytic(self.P1, self.P2, self.DELTA)
        region = helper_region(self.P1, self.P2, opt.aux)
        assert region.contains(opt.rates, tol=1e-9)
        rhs = {next(iter(c.coeffs)): c.rhs for c in region.constraints}
        assert rhs[R012] == pytest.approx(opt.rates[R012], abs=1e-9)
        assert rhs[R01] == pytest.approx(opt.rates[R01], abs=1e-9)
        # both sinks exactly at budget
        assert rhs[R11] == pytest.approx(hb(self.P1) + self.DELTA, abs=1e-9)
        assert rhs[R22] == pytest.approx(hb(self.P2) + self.DELTA, abs=1e-9)

    def test_literal_orientation(self):
        # p1 > p2 puts the private packet on sink 2, as in the two-sink formula
        p1, p2 = 0.2, 0.1
        opt = helper_analytic(p1, p2, self.DELTA)
        assert opt.aux.fine_sink == 2
        region = helper_region(p1, p2, opt.aux)
        rhs = {next(iter(c.coeffs)): c.rhs for c in region.constraints}
        assert rhs[R012] == pytest.approx(1 - hb(opt.p01), abs=1e-9)
        assert rhs[R02] == pytest.approx(hb(opt.p01) - hb(opt.p02), abs=1e-9)

    def test_rejects_leaky_aux(self):
        pmf = dsbs_star(0.1, 0.2).with_channel("X1", bsc_kernel(0.1), "U0", Auxiliary(0, [1, 2]))
        with pytest.raises(ValueError, match="conditionally independent"):
            helper_region_from_pmf(pmf)

    def test_negative_delta(self):
        with pytest.raises(ValueError):
            helper_analytic(0.1, 0.2, -0.01)
        with pytest.raises(ValueError):
            helper_sweep(0.1, 0.2, -0.01, 10)

    def test_sweep_near_analytic(self):
        res = helper_sweep(self.P1, self.P2, self.DELTA, 200)
        opt = helper_analytic(self.P1, self.P2, self.DELTA)
        assert abs(res.rates[R012] - (1 - hb(opt.p02))) < 1e-3
        cell = 0.5 / 200
        assert abs(res.aux.p_fine - opt.aux.p_fine) <= cell
        assert abs(res.aux.p_cascade - opt.aux.p_cascade) <= cell
        assert res.aux.fine_sink == opt.aux.fine_sink

    def test_sweep_zero_delta_is_noiseless(self):
        res = helper_sweep(self.P1, self.P2, 0.0, 50)
        assert res.aux.p_fine == 0.0 and res.aux.p_cascade == 0.0
        assert res.rates[R012] == pytest.approx(1.0)

    def test_sweep_symmetric(self):
        res = helper_sweep(0.15, 0.15, 0.1, 100)
        # private packets vanish up to the refined grid resolution
        assert res.rates[R01] < 1e-4 and res.rates[R02] < 1e-4
        a = helper_sweep(0.1, 0.2, 0.1, 100)
        b = helper_sweep(0.2, 0.1, 0.1, 100)
        assert a.rates[R01] == pytest.approx(b.rates[R02], abs=1e-9)
        assert a.rates[R012] == pytest.approx(b.rates[R012], abs=1e-9)
        assert a.cost == pytest.approx(b.cost, abs=1e-12)

    def test_helper_aux_validation(self):
        with pytest.raises(ValueError):
            HelperAux(0.6, 0.1)
        with pytest.raises(ValueError):
            HelperAux(0.1, 0.1, fine_sink=3)


def test_sweep_custom_weights():
    # a cheap private link makes the sweep prefer more private rate
    base = helper_sweep(0.1, 0.2, 0.1, 60)
    heavy = helper_sweep(0.1, 0.2, 0.1, 60, weights={R012: 3.0, R01: 0.1, R02: 0.1})
    assert heavy.cost < base.cost
