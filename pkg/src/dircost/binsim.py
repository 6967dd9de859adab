"""Monte Carlo power binning with side-information decoding.

Every source sequence in {0,1}^n gets one uniform bin index per packet it
sends.  A sink sees the bin indices of the packets addressed to it, plus the
raw sequences of sources that send no packets at all (uncoded side
information), and picks the maximum-likelihood sequence tuple inside the bin
intersection.  Ties go to the smallest sequence index.

Sequences are integers: bit t of the integer is the symbol at time t.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import product

import numpy as np

from .netgraph import DemandMap, PacketId
from .probkit import JointPmf, cond_entropy, dsbs_star

MAX_BLOCKLENGTH = 20
MAX_SOURCES = 3
MAX_JOINT_CANDIDATES = 1 << 22
CONFIDENCE = 0.95

# SeedSequence stream tags
_SAMPLE_STREAM = 1
_BIN_STREAM = 2


class BinSimError(ValueError):
    pass


@dataclass
class BinSimConfig:
    n: int
    pmf: JointPmf
    demands: DemandMap
    rates: dict[PacketId, float]
    trials: int
    seed: int

    def __post_init__(self):
        if not isinstance(self.n, (int, np.integer)) or self.n < 1:
            raise BinSimError("blocklength must be a positive integer")
        if self.n > MAX_BLOCKLENGTH:
            raise BinSimError(f"blocklength {self.n} exceeds the exhaustive-decoding cap {MAX_BLOCKLENGTH}")
        if not isinstance(self.trials, (int, np.integer)) or self.trials < 1:
            raise BinSimError("trials must be a positive integer")
        if not 0 <= int(self.seed) < 2**64:
            raise BinSimError("seed must be a 64-bit unsigned integer")
        srcs = self.pmf.sources()
        if len(srcs) > MAX_SOURCES:
            raise BinSimError(f"at most {MAX_SOURCES} sources are simulated")
        for i, pos in srcs.items():
            if self.pmf.variables[pos].size != 2:
                raise BinSimError(f"source {i} is not binary")
        if len(srcs) != len(self.pmf.variables):
            raise BinSimError("the simulation model must contain source variables only")
        for i in self.demands.sources:
            if i not in srcs:
                raise BinSimError(f"demanded source {i} is missing from the model")
        self.rates = {PacketId(p.source, p.sinks) if not isinstance(p, PacketId) else p: float(r) for p, r in self.rates.items()}
        for p, r in self.rates.items():
            if not (r >= 0 and math.isfinite(r)):
                raise BinSimError(f"rate of packet {p} must be finite and nonnegative")
            if p.source not in self.demands.sources:
                raise BinSimError(f"packet {p} comes from an unknown source")
            if not p.sink_set <= self.demands.pi[p.source]:
                raise BinSimError(f"packet {p} addresses sinks that do not request source {p.source}")

    @classmethod
    def dsbs(cls, p1: float, p2: float, n: int, rates, trials: int, seed: int) -> "BinSimConfig":
        """X1, X2 are X0 through BSC(p1), BSC(p2); sink j wants X0 and holds Xj."""
        return cls(n, dsbs_star(p1, p2), DemandMap({1: [0, 1], 2: [0, 2]}), dict(rates), trials, seed)

    @property
    def coded_sources(self) -> list[int]:
        return sorted({p.source for p in self.rates})

    def bin_count(self, packet: PacketId) -> int:
        return bin_count(self.n, self.rates[packet])


@dataclass
class SinkEstimate:
    errors: int
    trials: int
    estimate: float
    half_width: float
    low: float
    high: float


@dataclass
class BinSimReport:
    n: int
    trials: int
    seed: int
    sinks: dict[int, SinkEstimate] = field(default_factory=dict)

    @property
    def average(self) -> float:
        """Sink-averaged block error probability."""
        if not self.sinks:
            return 0.0
        return float(np.mean([s.estimate for s in self.sinks.values()]))

    def rows(self) -> list[dict]:
        out = [
            {"sink": j, "errors": s.errors, "trials": s.trials, "error": s.estimate, "ci_half_width": s.half_width, "ci_low": s.low, "ci_high": s.high}
            for j, s in sorted(self.sinks.items())
        ]
        hw = min(1.0, hoeffding_half_width(self.trials))
        out.append({"sink": "mean", "errors": "", "trials": self.trials, "error": self.average, "ci_half_width": hw,
                    "ci_low": max(0.0, self.average - hw), "ci_high": min(1.0, self.average + hw)})
        return out

    def summary(self) -> str:
        lines = [f"power binning: n={self.n} trials={self.trials} seed={self.seed}"]
        for j, s in sorted(self.sinks.items()):
            lines.append(f"  sink {j}: error {s.estimate:.4f} +/- {s.half_width:.4f} ({s.errors}/{s.trials})")
        lines.append(f"  average: {self.average:.4f}")
        return "\n".join(lines)


def bin_count(n: int, rate: float) -> int:
    """ceil(2^{nR}), capped at 2^62 (already far beyond 2^n sequences)."""
    e = n * rate
    if e >= 62:
        return 1 << 62
    return max(1, math.ceil(2.0**e - 1e-9))


def hoeffding_half_width(trials: int, confidence: float = CONFIDENCE) -> float:
    """Distribution-free half-width for a Bernoulli mean; valid at any trial count."""
    return math.sqrt(math.log(2.0 / (1.0 - confidence)) / (2.0 * trials))


def bin_indices(seed: int, packet: PacketId, n: int, rate: float) -> np.ndarray:
    """Bin index of every sequence 0 .. 2^n - 1 for one packet.

    A counter-based Philox stream keyed by (seed, packet) fills the table, so
    the assignment is a fixed function of (seed, packet id, sequence).
    """
    L = bin_count(n, rate)
    key = np.random.SeedSequence([int(seed), _BIN_STREAM, packet.source, len(packet.sinks), *packet.sinks])
    gen = np.random.Generator(np.random.Philox(key))
    return gen.integers(0, L, size=1 << n, dtype=np.int64)


def _group_ids(columns: list[np.ndarray], size: int) -> np.ndarray:
    """Dense ids such that two sequences share an id iff all columns agree."""
    g = np.zeros(size, dtype=np.int64)
    for col in columns:
        _, inv = np.unique(col, return_inverse=True)
        _, g = np.unique(g * size + inv.reshape(-1), return_inverse=True)
        g = g.reshape(-1)
    return g


class _SinkDecoder:
    def __init__(self, cfg: BinSimConfig, sink: int, bins: dict[PacketId, np.ndarray]):
        self.sink = sink
        n = cfg.n
        wanted = cfg.demands.sigma[sink]
        coded = set(cfg.coded_sources)
        self.targets = sorted(i for i in wanted if i in coded)
        self.side = sorted(i for i in wanted if i not in coded)
        size = 1 << n
        self.order, self.sorted_ids, self.ids = {}, {}, {}
        for i in self.targets:
            cols = [bins[p] for p in sorted(bins) if p.source == i and sink in p.sinks]
            g = _group_ids(cols, size) if cols else np.zeros(size, dtype=np.int64)
            order = np.argsort(g, kind="stable")
            self.ids[i], self.order[i], self.sorted_ids[i] = g, order, g[order]
        worst = 1
        for i in self.targets:
            worst *= int(np.bincount(self.ids[i]).max())
        if worst > MAX_JOINT_CANDIDATES:
            raise BinSimError(f"sink {sink}: joint bin intersections may hold {worst} candidates; raise rates or shrink n")
        # log-likelihood table over (targets..., side...) symbols, flattened
        pmf = cfg.pmf
        keep = [pmf.source_position(i) for i in self.targets + self.side]
        srt = sorted(keep)
        table = pmf.marginal_table(srt).transpose([srt.index(k) for k in keep])
        with np.errstate(divide="ignore"):
            self.logp = np.log(table).reshape(-1)
        self.n = n
        self.shifts = np.arange(n, dtype=np.int64)

    def decode(self, seqs: dict[int, int]) -> dict[int, int]:
        if not self.targets:
            return {}
        cands = []
        for i in self.targets:
            gid = self.ids[i][seqs[i]]
            lo = np.searchsorted(self.sorted_ids[i], gid, "left")
            hi = np.searchsorted(self.sorted_ids[i], gid, "right")
            cands.append(self.order[i][lo:hi])
        if len(cands) == 1:
            grids = [cands[0]]
        else:
            mesh = np.meshgrid(*cands, indexing="ij")
            grids = [m.reshape(-1) for m in mesh]
        # symbol index per (candidate, time) in the flattened table
        idx = np.zeros((grids[0].size, self.n), dtype=np.int64)
        for g in grids:
            idx = idx * 2 + ((g[:, None] >> self.shifts) & 1)
        for i in self.side:
            idx = idx * 2 + ((seqs[i] >> self.shifts) & 1)
        ll = self.logp[idx].sum(axis=1)
        best = int(np.argmax(ll))
        return {i: int(g[best]) for i, g in zip(self.targets, grids)}


def _sample(cfg: BinSimConfig) -> dict[int, np.ndarray]:
    """Draw trials x n symbols of every source; return packed sequences per source."""
    rng = np.random.default_rng(np.random.SeedSequence([int(cfg.seed), _SAMPLE_STREAM]))
    pmf = cfg.pmf
    flat = rng.choice(pmf.probs.size, size=(cfg.trials, cfg.n), p=pmf.probs)
    symbols = np.unravel_index(flat, pmf.table.shape)
    weights = np.left_shift(1, np.arange(cfg.n, dtype=np.int64))
    return {i: (symbols[pos].astype(np.int64) * weights).sum(axis=1) for i, pos in pmf.sources().items()}


def run_power_binning(cfg: BinSimConfig) -> BinSimReport:
    bins = {p: bin_indices(cfg.seed, p, cfg.n, r) for p, r in sorted(cfg.rates.items())}
    seqs = _sample(cfg)
    report = BinSimReport(cfg.n, cfg.trials, int(cfg.seed))
    hw = min(1.0, hoeffding_half_width(cfg.trials))
    for j in cfg.demands.sinks:
        dec = _SinkDecoder(cfg, j, bins)
        errors = 0
        if dec.targets:
            for t in range(cfg.trials):
                truth = {i: int(s[t]) for i, s in seqs.items()}
                guess = dec.decode(truth)
                errors += any(guess[i] != truth[i] for i in dec.targets)
        est = errors / cfg.trials
        report.sinks[j] = SinkEstimate(errors, cfg.trials, est, hw, max(0.0, est - hw), min(1.0, est + hw))
    return report


def nested_rates(cfg: BinSimConfig, offset: float) -> dict[PacketId, float]:
    """Packets for the single coded source at sum rate H(X|side info) + offset per sink.

    The shared packet to every requesting sink carries the smallest target;
    each sink's private packet tops it up to that sink's own target.
    """
    coded = cfg.coded_sources
    if len(coded) != 1:
        raise BinSimError("rate offsets apply to configurations with exactly one coded source")
    (b,) = coded
    sinks = sorted(cfg.demands.pi[b])
    pmf = cfg.pmf
    target = {}
    for j in sinks:
        side = [pmf.source_position(i) for i in sorted(cfg.demands.sigma[j]) if i != b]
        target[j] = max(0.0, cond_entropy(pmf, [pmf.source_position(b)], side) + offset)
    common = min(target.values())
    rates = {PacketId(b, sinks): common}
    if len(sinks) > 1:
        for j in sinks:
            rates[PacketId(b, [j])] = target[j] - common
    return rates


def threshold_sweep(base: BinSimConfig, rate_offsets, blocklengths=None) -> list[dict]:
    """Error versus rate offset around the conditional-entropy threshold.

    ``blocklengths`` defaults to the base blocklength.  Each row carries the
    sink-averaged error and its half-width.
    """
    ns = [base.n] if blocklengths is None else list(blocklengths)
    rows = []
    for offset, n in product(list(rate_offsets), ns):
        cfg = BinSimConfig(n, base.pmf, base.demands, nested_rates(base, offset), base.trials, base.seed)
        rep = run_power_binning(cfg)
        rows.append({"offset": float(offset), "n": n, "error": rep.average, "ci": min(1.0, hoeffding_half_width(rep.trials))})
    return rows
