"""Monte Carlo engine for the fixed-n and Poisson(lam) models.

Randomness layout (all from ``numpy.random.SeedSequence(seed, spawn_key=...)``):

* ``(trial, 0)``: the trial generator, which draws N (Poisson model) and the
  pivot uniforms;
* ``(trial, 1, w)``: word column w of uniform keys;
* ``(trial, 2, w)``: the uniforms behind word column w of density-driven keys.

Each trial is therefore reproducible on its own, and trials are reduced in
fixed chunks in trial order, so results do not depend on the worker count.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import _kernels
from .bitkeys import DEFAULT_DEPTH_CAP, key_from_words
from .densities import DensitySpec, rank_masses
from .errors import DepthCapExceeded, ExperimentFailed
from .poisson_model import poisson_bit_mean_exact
from .sorters import coupled_run

ALGORITHMS = ("quicksort", "bitsquick", "radix_exchange", "coupled")
STATISTICS = ("K", "B", "Q", "savings", "inspections", "B/K")
ABORT_TOLERANCE = 1e-3


@dataclass(frozen=True)
class ExperimentConfig:
    model: str = "fixed_n"
    n: int = 0
    lam: float = 0.0
    density: DensitySpec | None = None
    algorithms: tuple[str, ...] = ("quicksort", "bitsquick")
    trials: int = 1000
    seed: int = 0
    depth_cap: int = DEFAULT_DEPTH_CAP
    output: str | None = None
    output_format: str = "csv"
    chunk_size: int = 256
    workers: int = 1

    def __post_init__(self):
        if self.model not in ("fixed_n", "poisson"):
            raise ValueError(f"unknown model {self.model!r}")
        if self.model == "fixed_n" and self.n < 0:
            raise ValueError("n must be nonnegative")
        if self.model == "poisson" and not self.lam > 0:
            raise ValueError("lam must be positive")
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if not self.algorithms or any(a not in ALGORITHMS for a in self.algorithms):
            raise ValueError(f"algorithms must be a nonempty subset of {ALGORITHMS}")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if self.depth_cap < 1 or self.chunk_size < 1 or self.workers < 1:
            raise ValueError("depth_cap, chunk_size and workers must be positive")
        if self.output_format not in ("csv", "json"):
            raise ValueError("output_format must be csv or json")

    def describe(self) -> dict:
        d = asdict(self)
        d["density"] = None if self.density is None else json.loads(self.density.to_json())
        d["algorithms"] = list(self.algorithms)
        return d


@dataclass
class SummaryStats:
    """Streaming mean/variance/min/max; ``merge`` uses the pairwise update of Chan et al."""

    trials: int = 0
    mean: float = 0.0
    m2: float = 0.0
    min: float = math.inf
    max: float = -math.inf

    @classmethod
    def from_values(cls, values) -> "SummaryStats":
        x = np.asarray(values, dtype=np.float64)
        if x.size == 0:
            return cls()
        mean = float(np.mean(x))
        return cls(int(x.size), mean, float(np.sum((x - mean) ** 2)), float(x.min()), float(x.max()))

    def merge(self, other: "SummaryStats") -> "SummaryStats":
        if other.trials == 0:
            return SummaryStats(self.trials, self.mean, self.m2, self.min, self.max)
        if self.trials == 0:
            return SummaryStats(other.trials, other.mean, other.m2, other.min, other.max)
        n = self.trials + other.trials
        delta = other.mean - self.mean
        mean = self.mean + delta * other.trials / n
        m2 = self.m2 + other.m2 + delta * delta * self.trials * other.trials / n
        return SummaryStats(n, mean, m2, min(self.min, other.min), max(self.max, other.max))

    @property
    def variance(self) -> float:
        return self.m2 / (self.trials - 1) if self.trials > 1 else 0.0

    @property
    def se(self) -> float:
        return math.sqrt(self.variance / self.trials) if self.trials else math.nan

    def row(self) -> dict:
        return {"trials": self.trials, "mean": self.mean, "var": self.variance,
                "se": self.se, "min": self.min, "max": self.max}


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    stats: dict[str, SummaryStats]
    aborted: int = 0
    per_trial: dict[str, np.ndarray] = field(default_factory=dict)

    def __getitem__(self, key: str) -> SummaryStats:
        return self.stats[key]


# --- key generation ------------------------------------------------------------------

def _ss(seed: int, *key: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(seed, spawn_key=key)


def uniform_words(seed: int, trial: int, n: int, n_words: int) -> np.ndarray:
    cols = [np.random.PCG64(_ss(seed, trial, 1, w)).random_raw(n) for w in range(n_words)]
    return np.ascontiguousarray(np.column_stack(cols)) if n else np.zeros((0, n_words), np.uint64)


class DensityWords:
    """Digit source for keys drawn from ``spec``, built on :func:`_kernels.density_column`."""

    def __init__(self, spec: DensitySpec):
        self.spec = spec
        self.top_rank = spec.breakpoint_rank
        masses = [rank_masses(spec, k) for k in range(self.top_rank + 1)]
        self.rank_table = np.concatenate(masses)
        self.rank_offsets = np.array([2**k - 1 for k in range(self.top_rank + 2)], dtype=np.int64)
        deg1 = max(len(p.coeffs) for p in spec.pieces)
        self.piece_lo = np.array([float(p.a) for p in spec.pieces])
        self.piece_hi = np.array([float(p.b) for p in spec.pieces])
        self.piece_coeffs = np.zeros((len(spec.pieces), deg1))
        for q, p in enumerate(spec.pieces):
            self.piece_coeffs[q, :len(p.coeffs)] = [float(c) for c in p.coeffs]

    def __call__(self, seed: int, trial: int, n: int, n_words: int) -> np.ndarray:
        deg1 = self.piece_coeffs.shape[1]
        state = (np.zeros(n, np.int64), np.zeros(n, np.int64), np.zeros((n, deg1)),
                 np.full(n, -1, np.int64))
        out = np.empty((n, n_words), dtype=np.uint64)
        for w in range(n_words):
            raw = np.random.PCG64(_ss(seed, trial, 2, w)).random_raw((n, 64))
            out[:, w] = _kernels.density_column(raw, self.rank_table, self.rank_offsets, self.top_rank,
                                                self.piece_lo, self.piece_hi, self.piece_coeffs, *state)
        return out


def _word_source(config: ExperimentConfig):
    if config.density is None or config.density.is_uniform:
        return uniform_words
    return DensityWords(config.density)


# --- one trial ---------------------------------------------------------------------

def _trial_size(config: ExperimentConfig, rng: np.random.Generator) -> int:
    return config.n if config.model == "fixed_n" else int(rng.poisson(config.lam))


def run_trial(config: ExperimentConfig, trial: int, source=None, want_pairs: bool = False) -> dict:
    """Run the configured algorithms on one input; returns the per-trial statistics.

    Raises :class:`DepthCapExceeded` when the keys agree on more digits than
    the cap allows.
    """
    source = source or _word_source(config)
    rng = np.random.Generator(np.random.PCG64(_ss(config.seed, trial, 0)))
    n = _trial_size(config, rng)
    pivot_u = rng.random(max(n, 1))
    max_words = max(1, math.ceil(config.depth_cap / 64))
    n_words = 1
    perm = np.empty(n, dtype=np.int64)
    pairs = np.zeros((n, n) if want_pairs else (1, 1), dtype=np.int64)
    want_sort = any(a in config.algorithms for a in ("quicksort", "bitsquick", "coupled"))
    while True:
        words = source(config.seed, trial, n, n_words)
        out = {"n": n}
        status = _kernels.OK
        if want_sort:
            pairs[:] = 0
            status, K, B, Q = _kernels.quicksort_tally(words, pivot_u, perm, pairs, want_pairs)
            out.update(K=K, B=B, Q=Q, savings=B - Q)
            if want_pairs:
                out["pairs"] = pairs.copy()
                out["order"] = perm.copy()
        if status == _kernels.OK and "radix_exchange" in config.algorithms:
            status, insp = _kernels.radix_tally(words, np.empty(n, dtype=np.int64))
            out["inspections"] = insp
        if status == _kernels.OK:
            if "coupled" in config.algorithms:
                _check_coupled(words, pivot_u, out, config.depth_cap)
            return out
        if n_words >= max_words:
            raise DepthCapExceeded(config.depth_cap)
        n_words = min(2 * n_words, max_words)


def _check_coupled(words, pivot_u, out, depth_cap):
    """Replay the trial through the reference sorters and the savings identity."""
    keys = [key_from_words(row, depth_cap) for row in words]
    res = coupled_run(keys, list(pivot_u))
    if (res.B, res.Q) != (out["B"], out["Q"]) or res.B - res.Q != res.savings_check:
        raise ExperimentFailed(f"coupled replay gave B={res.B} Q={res.Q} savings={res.savings_check}, "
                               f"kernel gave B={out['B']} Q={out['Q']}")


def _chunk(config: ExperimentConfig, start: int, stop: int):
    source = _word_source(config)
    rows = {s: [] for s in STATISTICS}
    aborted = 0
    for t in range(start, stop):
        try:
            r = run_trial(config, t, source)
        except DepthCapExceeded:
            aborted += 1
            continue
        for s in ("K", "B", "Q", "savings", "inspections"):
            if s in r:
                rows[s].append(r[s])
        if r.get("K"):
            rows["B/K"].append(r["B"] / r["K"])
    return {s: np.asarray(v, dtype=np.float64) for s, v in rows.items()}, aborted


def _selected(config: ExperimentConfig) -> tuple[str, ...]:
    algos = set(config.algorithms)
    names = []
    if algos & {"quicksort", "bitsquick", "coupled"}:
        names += ["K", "B"]
    if algos & {"bitsquick", "coupled"}:
        names += ["Q", "savings"]
    if "radix_exchange" in algos:
        names.append("inspections")
    if "B" in names:
        names.append("B/K")
    return tuple(names)


def run_experiment(config: ExperimentConfig, keep_trials: bool = False) -> ExperimentResult:
    """Run ``config.trials`` independent trials and summarize each statistic.

    Trials that hit the depth cap are dropped and counted; more than 0.1% of
    them fails the experiment.
    """
    bounds = [(s, min(s + config.chunk_size, config.trials))
              for s in range(0, config.trials, config.chunk_size)]
    if config.workers > 1:
        with ProcessPoolExecutor(config.workers) as pool:
            parts = list(pool.map(_chunk, [config] * len(bounds), *zip(*bounds)))
    else:
        parts = [_chunk(config, a, b) for a, b in bounds]
    names = _selected(config)
    stats = {s: SummaryStats() for s in names}
    aborted = 0
    for values, ab in parts:
        aborted += ab
        for s in names:
            stats[s] = stats[s].merge(SummaryStats.from_values(values[s]))
    if aborted > ABORT_TOLERANCE * config.trials:
        raise ExperimentFailed(f"{aborted} of {config.trials} trials hit the depth cap")
    per_trial = {s: np.concatenate([p[0][s] for p in parts]) for s in names} if keep_trials else {}
    result = ExperimentResult(config, stats, aborted, per_trial)
    if config.output:
        write_result(result, config.output, config.output_format)
    return result


# --- output ----------------------------------------------------------------------

CSV_COLUMNS = ("statistic", "trials", "mean", "var", "se", "min", "max")


def result_table(result: ExperimentResult, fmt: str = "csv") -> str:
    if fmt == "json":
        return json.dumps({s: st.row() for s, st in result.stats.items()}, indent=1, sort_keys=True) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for s, st in result.stats.items():
        row = st.row()
        w.writerow([s] + [repr(row[c]) for c in CSV_COLUMNS[1:]])
    return buf.getvalue()


def content_hash(text: str) -> str:
    """Hash in the style of a git blob id: sha1 of "blob <len>\\0" + content."""
    data = text.encode()
    return hashlib.sha1(b"blob %d\0" % len(data) + data).hexdigest()


def manifest(config: ExperimentConfig, aborted: int = 0) -> dict:
    echo = json.dumps(config.describe(), sort_keys=True)
    return {"config": config.describe(), "input_hash": content_hash(echo), "aborted": aborted}


def write_result(result: ExperimentResult, path, fmt: str = "csv") -> None:
    path = Path(path)
    path.write_text(result_table(result, fmt))
    Path(str(path) + ".manifest.json").write_text(
        json.dumps(manifest(result.config, result.aborted), indent=1, sort_keys=True) + "\n")


# --- derived experiments ---------------------------------------------------------

def variance_ratio_scan(lams, trials: int, seed: int = 0) -> list[tuple[float, float]]:
    """(lam, sample Var(B) / lam^2) for Quicksort under the Poisson model."""
    out = []
    for i, lam in enumerate(lams):
        if lam < 1:
            raise ValueError("lam grid must be >= 1")
        cfg = ExperimentConfig(model="poisson", lam=float(lam), algorithms=("quicksort",),
                               trials=trials, seed=seed + i)
        out.append((float(lam), run_experiment(cfg)["B"].variance / lam**2))
    return out


def within_band(ratios, factor: float = 10.0) -> bool:
    """All values positive and within ``factor`` of their median."""
    r = np.asarray(ratios, dtype=float)
    med = float(np.median(r))
    return bool(np.all(r > 0) and np.all(r >= med / factor) and np.all(r <= med * factor))


@dataclass(frozen=True)
class ShiftEstimate:
    lam: float
    shift: float
    se: float


def entropy_shift_estimate(spec: DensitySpec, lams, trials: int, seed: int = 0) -> list[ShiftEstimate]:
    """(mean B_f - mu_unif(lam)) / (2 lam ln lam) from simulation under ``spec``."""
    lams = [float(x) for x in lams]
    if any(b <= a for a, b in zip(lams, lams[1:])):
        raise ValueError("lam grid must be increasing")
    out = []
    for i, lam in enumerate(lams):
        cfg = ExperimentConfig(model="poisson", lam=lam, density=spec, algorithms=("quicksort",),
                               trials=trials, seed=seed + i)
        b = run_experiment(cfg)["B"]
        scale = 2 * lam * math.log(lam)
        out.append(ShiftEstimate(lam, (b.mean - poisson_bit_mean_exact(lam)) / scale, b.se / scale))
    return out


@dataclass
class SavingsReport:
    runs: dict[int, int]
    violations: list[tuple[int, int, int, int, int]]
    mean_savings: dict[int, float]

    @property
    def passed(self) -> bool:
        return not self.violations


def savings_identity_suite(n_values, runs_per_n: int, seed: int = 0) -> SavingsReport:
    """Coupled reference runs; every run must satisfy B - Q = savings and Q <= B exactly.

    Violations are recorded as (n, run, B, Q, savings).
    """
    runs, violations, means = {}, [], {}
    for n in n_values:
        if not 2 <= n <= 512:
            raise ValueError("n must lie in [2, 512]")
        total = 0
        for r in range(runs_per_n):
            rng = np.random.Generator(np.random.PCG64(_ss(seed, n, r)))
            words = rng.bit_generator.random_raw((n, 2))
            keys = [key_from_words(row, tail=_RandomTail(rng)) for row in words]
            res = coupled_run(keys, rng.random(n))
            total += res.B - res.Q
            if res.B - res.Q != res.savings_check or res.Q > res.B:
                violations.append((n, r, res.B, res.Q, res.savings_check))
        runs[n] = runs_per_n
        means[n] = total / runs_per_n
    return SavingsReport(runs, violations, means)


class _RandomTail:
    """Further fair digits for reference keys, drawn when a comparison needs them."""

    def __init__(self, rng: np.random.Generator):
        self.rng = rng

    def __call__(self, have: int) -> tuple[int, int]:
        return int(self.rng.bit_generator.random_raw()), 64


def pairwise_comparison_rates(n: int = 8, trials: int = 100_000, seed: int = 0):
    """Empirical P(ranks i and j are compared) for i < j, with binomial standard errors.

    Returns ``(rates, se, expected)`` as n x n arrays (upper triangle used);
    ``expected[i, j] = 2 / (j - i + 1)`` with 1-based ranks.
    """
    cfg = ExperimentConfig(n=n, algorithms=("quicksort",), trials=trials, seed=seed)
    source = _word_source(cfg)
    hits = np.zeros((n, n))
    for t in range(trials):
        r = run_trial(cfg, t, source, want_pairs=True)
        order = r["order"]
        hits += (r["pairs"][np.ix_(order, order)] > 0)
    rates = hits / trials
    se = np.sqrt(rates * (1 - rates) / trials)
    i, j = np.indices((n, n))
    expected = np.where(j > i, 2.0 / (np.abs(j - i) + 1), 0.0)
    return rates, se, expected
