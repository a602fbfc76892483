"""Monte Carlo replication engine over the basis ladder.

Each replication draws one sample and fits the model at every ladder ``K``
(the nested bases are evaluated once at the largest ``K`` and sliced).
Replications run on a thread pool; results are written into per-index slots
and reduced in index order, so output does not depend on the worker count.
"""

from __future__ import annotations

import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields
from typing import Callable, Iterable, Sequence, TypeVar

import numpy as np
from numpy.typing import NDArray

from ..basis import BasisSpec, build_basis, ladder
from ..errors import ConfigError, NumericalError, SimulationAborted
from ..plm import confidence_interval, fit_plm
from ..projection import factorize
from ..vstat import DecompositionReport, decompose_plm
from . import rng as _rng
from .dgp import DgpSpec, MixtureSpec, draw_sample, standardize_mixture

log = logging.getLogger(__name__)

MAX_SKIP_RATE = 0.01
CSV_HEADER = "K,K_over_n,bias,sd,rmse,bias_over_sd,cov_ci0,cov_ci1,avg_sigma_hat,avg_s"

T = TypeVar("T")


@dataclass(frozen=True)
class McConfig:
    dgp: DgpSpec
    S: int = 5000
    ladder: tuple[int, ...] = ()
    level: float = 0.95
    master_seed: int = 0
    threads: int = 1
    max_degree: int = 10
    max_interaction_degree: int = 5

    def __post_init__(self) -> None:
        if self.S < 1:
            raise ConfigError("S must be at least 1", key="S")
        if not 0 < self.level < 1:
            raise ConfigError("level must lie in (0, 1)", key="level")
        if self.master_seed < 0:
            raise ConfigError("seed must be non-negative", key="seed")
        if self.threads < 1:
            raise ConfigError("threads must be at least 1", key="threads")
        full = [s.K for s in self.full_ladder()]
        if not self.ladder:
            object.__setattr__(self, "ladder", tuple(full))
        bad = [K for K in self.ladder if K not in full]
        if bad:
            raise ConfigError(f"K values {bad} are not on the ladder {full}", key="ladder")
        object.__setattr__(self, "ladder", tuple(sorted(set(self.ladder))))
        too_big = [K for K in self.ladder if self.dgp.n <= 1 + K]
        if too_big:
            raise ConfigError(f"need n > d + K; n={self.dgp.n} is too small for K={too_big}", key="ladder")

    def full_ladder(self) -> list[BasisSpec]:
        return ladder(self.dgp.d_z, self.max_degree, self.max_interaction_degree)

    def specs(self) -> list[BasisSpec]:
        by_k = {s.K: s for s in self.full_ladder()}
        return [by_k[K] for K in self.ladder]


@dataclass(frozen=True)
class McSummaryRow:
    K: int
    K_over_n: float
    bias: float
    sd: float
    rmse: float
    bias_over_sd: float
    cov_ci0: float
    cov_ci1: float
    avg_sigma_hat: float
    avg_s: float

    def to_csv(self) -> str:
        return ",".join(_fmt(getattr(self, f.name)) for f in fields(self))


def _fmt(x: float | int) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


@dataclass
class McDraws:
    """Per-replication results, arrays of shape ``(S, len(ladder))``; NaN marks a skipped fit."""

    ladder: tuple[int, ...]
    n: int
    beta0: float
    beta: NDArray[np.float64]
    gamma: NDArray[np.float64]
    s2: NDArray[np.float64]
    sigma2: NDArray[np.float64]
    hit0: NDArray[np.float64]
    hit1: NDArray[np.float64]
    skipped: NDArray[np.int64] = field(default_factory=lambda: np.zeros(0, dtype=np.int64))

    def column(self, name: str, K: int) -> NDArray[np.float64]:
        """Non-skipped values of one statistic at one ``K``."""
        col = getattr(self, name)[:, self.ladder.index(K)]
        return col[~np.isnan(col)]


def parallel_map(fn: Callable[[int], T], count: int, threads: int) -> list[T]:
    """``[fn(0), ..., fn(count - 1)]`` evaluated on up to ``threads`` workers, in index order."""
    if threads <= 1 or count <= 1:
        return [fn(i) for i in range(count)]
    out: list[T | None] = [None] * count
    chunk = max(1, math.ceil(count / (threads * 4)))

    def run(start: int) -> None:
        for i in range(start, min(count, start + chunk)):
            out[i] = fn(i)

    with ThreadPoolExecutor(max_workers=threads) as pool:
        list(pool.map(run, range(0, count, chunk)))
    return out  # type: ignore[return-value]


def _replicate(config: McConfig, specs: Sequence[BasisSpec], r: int) -> NDArray[np.float64]:
    """Row of ``(beta, gamma, s2, sigma2, hit0, hit1)`` per ladder ``K``; NaN on failure."""
    sample = draw_sample(config.dgp, _rng.rep_seed(config.master_seed, r))
    P_full = build_basis(sample.Z, specs[-1]).values
    out = np.full((len(specs), 6), np.nan)
    beta0 = config.dgp.beta0
    for k, spec in enumerate(specs):
        try:
            w = factorize(P_full[:, : spec.K], strict=True)
            fit = fit_plm(sample.y, sample.X, w)
        except NumericalError as exc:
            log.debug("replication %d, K=%d skipped: %s", r, spec.K, exc)
            continue
        ci0 = confidence_interval(fit, config.level, corrected=False)
        ci1 = confidence_interval(fit, config.level, corrected=True)
        out[k] = (
            fit.beta_hat[0],
            fit.gamma_hat[0, 0],
            fit.s2,
            fit.sigma2_hat,
            float(ci0.covers(beta0)[0]),
            float(ci1.covers(beta0)[0]),
        )
    return out


def simulate_draws(config: McConfig, threads: int | None = None) -> McDraws:
    """Run every replication and collect raw per-fit statistics.

    Raises
    ------
    SimulationAborted
        If more than 1% of the replications fail at some ``K``.
    """
    specs = config.specs()
    workers = config.threads if threads is None else threads
    rows = parallel_map(lambda r: _replicate(config, specs, r), config.S, workers)
    arr = np.stack(rows)  # (S, nK, 6)
    skipped = np.isnan(arr[:, :, 0]).sum(axis=0)
    for K, count in zip(config.ladder, skipped):
        if count:
            log.warning("K=%d: %d of %d replications skipped", K, count, config.S)
        if count > MAX_SKIP_RATE * config.S:
            raise SimulationAborted(f"K={K}: {count} of {config.S} replications failed (limit 1%)")
    return McDraws(
        ladder=config.ladder,
        n=config.dgp.n,
        beta0=config.dgp.beta0,
        beta=arr[:, :, 0],
        gamma=arr[:, :, 1],
        s2=arr[:, :, 2],
        sigma2=arr[:, :, 3],
        hit0=arr[:, :, 4],
        hit1=arr[:, :, 5],
        skipped=skipped,
    )


def summarize(draws: McDraws) -> list[McSummaryRow]:
    """Collapse replications into one row per ``K``.

    ``sd`` is the population standard deviation over replications, so
    ``rmse**2 == bias**2 + sd**2`` up to rounding.
    """
    rows = []
    for K in draws.ladder:
        beta = draws.column("beta", K)
        err = beta - draws.beta0
        bias = float(np.mean(err))
        sd = float(np.std(beta))
        rows.append(
            McSummaryRow(
                K=K,
                K_over_n=K / draws.n,
                bias=bias,
                sd=sd,
                rmse=float(np.sqrt(np.mean(err * err))),
                bias_over_sd=bias / sd if sd > 0 else float("nan"),
                cov_ci0=float(np.mean(draws.column("hit0", K))),
                cov_ci1=float(np.mean(draws.column("hit1", K))),
                avg_sigma_hat=float(np.mean(np.sqrt(draws.column("sigma2", K)))),
                avg_s=float(np.mean(np.sqrt(draws.column("s2", K)))),
            )
        )
    return rows


def run_mc(config: McConfig, threads: int | None = None) -> list[McSummaryRow]:
    return summarize(simulate_draws(config, threads))


def rows_to_csv(rows: Iterable[McSummaryRow]) -> str:
    return "\n".join([CSV_HEADER, *(r.to_csv() for r in rows)]) + "\n"


def metadata(config: McConfig, wall_time: float | None = None) -> dict:
    dgp = config.dgp
    meta = {
        "model": dgp.model_id,
        "n": dgp.n,
        "S": config.S,
        "seed": config.master_seed,
        "level": config.level,
        "ladder": list(config.ladder),
        "beta0": dgp.beta0,
        "d_z": dgp.d_z,
        "regression": dgp.regression,
        "hetero_v": dgp.hetero_v,
        "varsigma": dgp.varsigma,
        "eps_mixture": {"label": dgp.eps_dist.label, "components": [list(c) for c in dgp.eps_dist.components]},
        "v_mixture": {"label": dgp.v_dist.label, "components": [list(c) for c in dgp.v_dist.components]},
        "generator": _rng.GENERATOR_NAME,
        "sample_reuse": "one sample per replication shared across the K ladder",
    }
    if wall_time is not None:
        meta["wall_time_seconds"] = wall_time
    return meta


# -- decomposition runs -----------------------------------------------------------------------


def run_decompositions(
    dgp: DgpSpec, K: int, S: int, master_seed: int = 0, threads: int = 1, spec: BasisSpec | None = None
) -> list[DecompositionReport]:
    """Oracle decomposition of ``S_n`` for ``S`` simulated samples at one ladder ``K``."""
    if spec is None:
        spec = McConfig(dgp=dgp, S=1, ladder=(K,)).specs()[0]

    def one(r: int) -> DecompositionReport:
        sample = draw_sample(dgp, _rng.rep_seed(master_seed, r))
        w = factorize(build_basis(sample.Z, spec), strict=True)
        return decompose_plm(w, sample.oracle, dgp.beta0)

    return parallel_map(one, S, threads)


def decompositions_to_csv(reports: Iterable[DecompositionReport]) -> str:
    lines = [",".join(DecompositionReport.FIELDS)]
    for rep in reports:
        lines.append(",".join(repr(float(getattr(rep, f)[0])) for f in DecompositionReport.FIELDS))
    return "\n".join(lines) + "\n"


# -- configuration file -----------------------------------------------------------------------

_KNOWN_KEYS = {
    "model", "n", "S", "seed", "level", "ladder", "threads", "regression",
    "max_degree", "max_interaction_degree", "gaussian", "asymmetric", "bimodal",
}


def parse_mixture(text: str, label: str) -> MixtureSpec:
    """``"w:m:v; w:m:v"`` -> standardized mixture."""
    comps = []
    for part in text.split(";"):
        part = part.strip()
        if not part:
            continue
        bits = part.split(":")
        if len(bits) != 3:
            raise ConfigError(f"mixture component {part!r} is not weight:mean:variance", key=label)
        try:
            comps.append(tuple(float(b) for b in bits))
        except ValueError:
            raise ConfigError(f"non-numeric mixture component {part!r}", key=label) from None
    try:
        return standardize_mixture(comps, label)  # type: ignore[arg-type]
    except ValueError as exc:
        raise ConfigError(str(exc), key=label) from None


def parse_config(text: str) -> McConfig:
    """Parse ``key = value`` lines (``#`` starts a comment).

    Keys: ``model`` (1-6, required), ``n``, ``S``, ``seed``, ``level``,
    ``ladder`` (comma-separated K values or ``all``), ``threads``,
    ``regression`` (``exp_sqnorm`` or ``sqnorm``), ``max_degree``,
    ``max_interaction_degree``, and mixture overrides ``gaussian``,
    ``asymmetric``, ``bimodal`` given as ``w:m:v; w:m:v``.
    """
    raw: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value", key=line)
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in _KNOWN_KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}", key=key)
        raw[key] = value

    def integer(key: str, default: int | None = None) -> int:
        if key not in raw:
            if default is None:
                raise ConfigError(f"missing required key {key!r}", key=key)
            return default
        try:
            return int(raw[key])
        except ValueError:
            raise ConfigError(f"{key} must be an integer, got {raw[key]!r}", key=key) from None

    model = integer("model")
    try:
        level = float(raw.get("level", "0.95"))
    except ValueError:
        raise ConfigError(f"level must be a number, got {raw['level']!r}", key="level") from None
    regression = raw.get("regression", "exp_sqnorm")
    if regression not in ("exp_sqnorm", "sqnorm"):
        raise ConfigError(f"unknown regression {regression!r}", key="regression")
    mixtures = {label: parse_mixture(raw[label], label) for label in ("gaussian", "asymmetric", "bimodal") if label in raw}
    ladder_text = raw.get("ladder", "all").strip()
    if ladder_text.lower() == "all":
        ks: tuple[int, ...] = ()
    else:
        try:
            ks = tuple(int(tok) for tok in ladder_text.split(",") if tok.strip())
        except ValueError:
            raise ConfigError(f"ladder must list integers, got {ladder_text!r}", key="ladder") from None
    dgp = DgpSpec.for_model(model, n=integer("n", 500), mixtures=mixtures, regression=regression)  # type: ignore[arg-type]
    return McConfig(
        dgp=dgp,
        S=integer("S", 5000),
        ladder=ks,
        level=level,
        master_seed=integer("seed", 0),
        threads=integer("threads", 1),
        max_degree=integer("max_degree", 10),
        max_interaction_degree=integer("max_interaction_degree", 5),
    )


def run_with_timing(config: McConfig, threads: int | None = None) -> tuple[list[McSummaryRow], dict]:
    start = time.perf_counter()
    rows = run_mc(config, threads)
    return rows, metadata(config, time.perf_counter() - start)
