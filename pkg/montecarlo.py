"""
Tailwise — Monte-Carlo reference
Seeded sampling of loss families and empirical VaR/ES with order-statistic
confidence bounds.

Streams are Philox4x64-10 counter-based generators (numpy.random.Philox)
keyed by SeedSequence(seed, spawn_key=(stream,)). Stream i always produces
the same draws, so the merged sample depends only on (n, seed, streams),
never on thread scheduling.
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from config import settings
from distributions import CompoundGeneral, CompoundPoisson, Exponential, Lognormal, LossSpec, ParetoI
from errors import DomainError, EstimationError, UnsupportedSpecError

logger = logging.getLogger("tailwise.montecarlo")

CI_LEVEL = 0.99
SPARSE_TAIL = 20
CLAIMS_PER_CHUNK = 2_000_000


@dataclass(frozen=True)
class McConfig:
    sample_count: int = field(default_factory=lambda: settings.mc_sample_count)
    seed: int = field(default_factory=lambda: settings.mc_seed)
    stream_count: int | None = None

    def __post_init__(self):
        if self.stream_count is None:
            object.__setattr__(self, "stream_count", min(settings.mc_streams, max(self.sample_count, 1)))
        if not 1 <= self.sample_count <= settings.mc_max_samples:
            raise DomainError(
                f"sample_count must lie in 1..{settings.mc_max_samples}, got {self.sample_count}",
                key="mc_n",
            )
        if not 0 <= self.seed < 2 ** 64:
            raise DomainError("seed must be a 64-bit unsigned integer", key="seed")
        if not 1 <= self.stream_count <= self.sample_count:
            raise DomainError("stream_count must lie in 1..sample_count", key="streams")


@dataclass(frozen=True)
class McEstimate:
    var_estimate: float
    es_estimate: float
    var_ci_low: float
    var_ci_high: float
    n: int
    alpha: float
    tail_count: int
    sparse_tail: bool


def make_generator(seed: int, stream: int = 0) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(stream,))))


# ── Sampling ────────────────────────────────────────────────────────────────

def _single_claims(spec, size: int, rng: np.random.Generator) -> np.ndarray:
    if isinstance(spec, Exponential):
        return rng.exponential(1.0 / spec.rate, size)
    if isinstance(spec, Lognormal):
        return rng.lognormal(spec.mu, spec.sigma, size)
    if isinstance(spec, ParetoI):
        # numpy's pareto is Lomax; shift by one for type I
        return spec.scale * (1.0 + rng.pareto(spec.shape, size))
    raise UnsupportedSpecError(f"cannot sample {spec.family.value}")


def sample_losses(spec: LossSpec, size: int, rng: np.random.Generator) -> np.ndarray:
    """`size` independent draws of the loss."""
    if isinstance(spec, CompoundGeneral):
        raise UnsupportedSpecError("a general compound given by summaries has no sampler")
    if not isinstance(spec, CompoundPoisson):
        return _single_claims(spec, size, rng)

    out = np.empty(size)
    chunk = max(1, int(CLAIMS_PER_CHUNK // max(spec.frequency, 1.0)))
    for start in range(0, size, chunk):
        stop = min(start + chunk, size)
        counts = rng.poisson(spec.frequency, stop - start)
        claims = _single_claims(spec.severity, int(counts.sum()), rng)
        owners = np.repeat(np.arange(stop - start), counts)
        # S = 0 when N = 0
        out[start:stop] = np.bincount(owners, weights=claims, minlength=stop - start)
    return out


def sample_loss(spec: LossSpec, rng: np.random.Generator) -> float:
    return float(sample_losses(spec, 1, rng)[0])


# ── Estimation ──────────────────────────────────────────────────────────────

def _stream_sizes(n: int, streams: int) -> list[int]:
    base, extra = divmod(n, streams)
    return [base + (1 if i < extra else 0) for i in range(streams)]


class McSample:
    """Sorted draws of one loss; immutable once built."""

    def __init__(self, draws: np.ndarray):
        if draws.size == 0:
            raise EstimationError("no draws")
        self._sorted = np.sort(draws)
        self._sorted.setflags(write=False)
        # suffix sums for tail means
        self._tail_sums = np.cumsum(self._sorted[::-1])[::-1]

    @property
    def n(self) -> int:
        return int(self._sorted.size)

    @property
    def draws(self) -> np.ndarray:
        return self._sorted

    def mean(self) -> float:
        return float(self._tail_sums[0] / self.n)

    def estimate(self, alpha: float) -> McEstimate:
        if not 0.0 < alpha < 1.0:
            raise DomainError(f"alpha must lie in (0, 1), got {alpha!r}", key="alpha")
        n = self.n
        # rank ceil(alpha n); the guard absorbs alpha*n landing just above an integer
        rank = min(max(math.ceil(alpha * n - 1e-9), 1), n)
        var = float(self._sorted[rank - 1])
        first = int(np.searchsorted(self._sorted, var, side="left"))
        tail_count = n - first
        if tail_count == 0:
            raise EstimationError(f"empty tail at alpha={alpha}")
        es = float(self._tail_sums[first] / tail_count)

        half = (1.0 - CI_LEVEL) / 2.0
        low_rank = max(int(stats.binom.ppf(half, n, alpha)), 1)
        high_rank = min(int(stats.binom.ppf(1.0 - half, n, alpha)) + 1, n)
        sparse = n * (1.0 - alpha) < SPARSE_TAIL
        if sparse:
            logger.warning("sparse tail: n=%d alpha=%s leaves %.1f expected draws", n, alpha, n * (1 - alpha))
        return McEstimate(
            var_estimate=var,
            es_estimate=max(es, var),
            var_ci_low=min(float(self._sorted[low_rank - 1]), var),
            var_ci_high=max(float(self._sorted[high_rank - 1]), var),
            n=n,
            alpha=alpha,
            tail_count=tail_count,
            sparse_tail=sparse,
        )


def draw_sample(spec: LossSpec, cfg: McConfig | None = None) -> McSample:
    """Generate cfg.sample_count draws across cfg.stream_count substreams."""
    cfg = cfg or McConfig()
    sizes = _stream_sizes(cfg.sample_count, cfg.stream_count)
    logger.info("mc draw family=%s n=%d seed=%d streams=%d",
                spec.family.value, cfg.sample_count, cfg.seed, cfg.stream_count)

    def run(stream: int) -> np.ndarray:
        return sample_losses(spec, sizes[stream], make_generator(cfg.seed, stream))

    if cfg.stream_count == 1:
        parts = [run(0)]
    else:
        with ThreadPoolExecutor(max_workers=cfg.stream_count) as pool:
            parts = list(pool.map(run, range(cfg.stream_count)))
    return McSample(np.concatenate(parts))


def estimate_risk(spec: LossSpec, alpha: float, cfg: McConfig | None = None) -> McEstimate:
    return draw_sample(spec, cfg).estimate(alpha)
