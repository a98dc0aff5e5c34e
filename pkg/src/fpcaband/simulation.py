"""Monte Carlo study of band coverage under a cosine-basis data-generating process.

Curves are ``X = sum_{j<=J} j^(-alpha/2) U_j phi_j`` with ``U_j`` uniform on
``[-sqrt(3), sqrt(3)]`` and ``phi`` the cosine system; the slope is
``b = sum_j b_j phi_j`` with ``b_1 = 1`` and ``b_j = 4 (-1)^j j^(-beta)``.

Random streams are keyed by ``(rep_index, label)`` under the master seed, so
data draws do not move when the number of quantile draws changes and the
study result does not depend on how replications are scheduled.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np
from threadpoolctl import threadpool_limits

from .band import ConfidenceBand, build_band, ms_band, simulate_quantile
from .cutoff import DEFAULT_CANDIDATES, RULES, risk_curve, select_cutoff
from .grid import GridDomain, GridFunction, cosine_basis, make_domain, norm
from .regression import FplrDataset, fit_pca, pca_design

STREAM_CURVES = 0
STREAM_NOISE = 1
STREAM_QUANTILE = 2
NOISE_KINDS = ("gaussian", "chisq5")
THREADS_ENV = "FPCA_BAND_THREADS"


@dataclass(frozen=True)
class DgpConfig:
    n: int
    alpha: float
    beta: float
    noise: str = "gaussian"
    p: int = 50
    J: int = 50
    seed: int = 0
    lower: float = 0.0
    upper: float = 1.0

    def __post_init__(self):
        if self.n < 3:
            raise ValueError(f"n must be at least 3, got {self.n}")
        if not (self.alpha > 0 and self.beta > 0):
            raise ValueError("alpha and beta must be positive")
        if self.noise not in NOISE_KINDS:
            raise ValueError(f"noise must be one of {NOISE_KINDS}, got {self.noise!r}")
        if not 1 <= self.J <= self.p:
            raise ValueError(f"series length J={self.J} must lie in [1, p={self.p}]")

    @property
    def domain(self) -> GridDomain:
        return make_domain(self.lower, self.upper, self.p)

    @property
    def unit_domain(self) -> GridDomain:
        return make_domain(0.0, 1.0, self.p)


def slope_coefficients(J: int, beta: float) -> np.ndarray:
    j = np.arange(1, J + 1, dtype=float)
    b = 4.0 * (-1.0) ** j * j**-beta
    b[0] = 1.0
    return b


def population_eigensystem(cfg: DgpConfig) -> tuple[np.ndarray, np.ndarray]:
    """Covariance eigenvalues and eigenfunction node values on ``cfg.domain``.

    On a rescaled interval of length L the eigenvalues scale by L and the
    eigenfunctions by ``1/sqrt(L)``.
    """
    j = np.arange(1, cfg.J + 1, dtype=float)
    L = cfg.upper - cfg.lower
    return L * j**-cfg.alpha, cosine_basis(cfg.domain, cfg.J)


def _stream(cfg: DgpConfig, rep_index: int, label: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(cfg.seed, spawn_key=(rep_index, label))


def _noise(rng: np.random.Generator, kind: str, n: int) -> np.ndarray:
    if kind == "gaussian":
        return rng.standard_normal(n)
    return (rng.chisquare(5, n) - 5.0) / math.sqrt(10.0)


def dgp_sample(cfg: DgpConfig, rep_index: int = 0) -> tuple[FplrDataset, GridFunction]:
    """One dataset and the true slope on ``cfg.domain``.

    Data are generated on [0, 1]; for another interval the node values of the
    curves are kept and the slope is divided by the interval length, which
    leaves every response unchanged.
    """
    unit = cfg.unit_domain
    basis = cosine_basis(unit, cfg.J)
    j = np.arange(1, cfg.J + 1, dtype=float)

    rng_x = np.random.default_rng(_stream(cfg, rep_index, STREAM_CURVES))
    U = rng_x.uniform(-math.sqrt(3.0), math.sqrt(3.0), size=(cfg.n, cfg.J))
    X = (U * j ** (-cfg.alpha / 2.0)) @ basis
    b_unit = slope_coefficients(cfg.J, cfg.beta) @ basis

    rng_e = np.random.default_rng(_stream(cfg, rep_index, STREAM_NOISE))
    Y = unit.weight * X @ b_unit + _noise(rng_e, cfg.noise, cfg.n)

    domain = cfg.domain
    truth = GridFunction(domain, b_unit / domain.length)
    return FplrDataset(domain, Y, X), truth


def coverage_indicators(band: ConfidenceBand, truth: GridFunction, tau2: float) -> tuple[bool, bool, float]:
    """Uniform coverage, modified coverage, and the uncovered fraction of the interval.

    The uncovered measure is the uncovered node count times the quadrature
    weight, so the fraction is ``count / p``.
    """
    covered = band.covered(truth)
    fraction = float(np.count_nonzero(~covered)) / band.domain.p
    return bool(covered.all()), bool(fraction <= tau2 + 1e-12), fraction


@dataclass(frozen=True)
class BandOutcome:
    ucp: bool
    mcp: bool
    uncovered_fraction: float
    max_width: float
    mean_width: float


def _band_outcome(band: ConfidenceBand, truth: GridFunction, tau2: float) -> BandOutcome:
    ucp, mcp, frac = coverage_indicators(band, truth, tau2)
    return BandOutcome(ucp, mcp, frac, band.max_width, band.mean_width)


@dataclass(frozen=True)
class RuleOutcome:
    rule: str
    m: int
    sq_error: float
    critical_value: float
    ball_radius: float
    ball_member: bool
    proposed: BandOutcome
    ms: BandOutcome


@dataclass(frozen=True)
class ReplicationRecord:
    rep_index: int
    mhat: int
    candidates: tuple[int, ...]
    sq_errors: np.ndarray = field(repr=False)
    outcomes: tuple[RuleOutcome, ...]

    def outcome(self, rule: str) -> RuleOutcome:
        for o in self.outcomes:
            if o.rule == rule:
                return o
        raise KeyError(rule)


def run_replication(
    cfg: DgpConfig,
    tau1: float = 0.1,
    tau2: float = 0.1,
    rules=RULES,
    draws: int = 20_000,
    rep_index: int = 0,
    candidates=DEFAULT_CANDIDATES,
) -> ReplicationRecord:
    """Generate one dataset, select cut-offs, build both bands and score them."""
    data, truth = dgp_sample(cfg, rep_index)
    eig, xi = pca_design(data)
    curve = risk_curve(data, candidates, design=(eig, xi))
    cands = curve.candidates

    top = max(cands)
    coef = (xi[:, :top].T @ data.responses) / data.n / eig.eigenvalues[:top]
    partial = np.cumsum(coef[:, None] * eig.eigenfunctions[:top], axis=0)
    w = data.domain.weight
    sq_errors = np.array([w * np.sum((partial[m - 1] - truth.values) ** 2) for m in cands])

    outcomes = []
    quantile_seed = _stream(cfg, rep_index, STREAM_QUANTILE)
    for rule in rules:
        m = select_cutoff(curve, rule)
        fit = fit_pca(data, m, eig=eig)
        q = simulate_quantile(fit.kappas, tau1, draws, seed=quantile_seed)
        band = build_band(fit, q, tau2)
        radius = fit.sigma * q.value / math.sqrt(fit.n)
        err = norm(fit.slope - truth)
        outcomes.append(
            RuleOutcome(
                rule=rule,
                m=m,
                sq_error=err**2,
                critical_value=q.value,
                ball_radius=radius,
                ball_member=bool(err <= radius),
                proposed=_band_outcome(band, truth, tau2),
                ms=_band_outcome(ms_band(fit, tau1), truth, tau2),
            )
        )
    return ReplicationRecord(rep_index, curve.argmin, cands, sq_errors, tuple(outcomes))


@dataclass
class StudyResult:
    """Aggregated study summaries.

    ``summary`` has one row per (config, rule, band kind); ``risk`` has one
    row per (config, candidate cut-off).  ``records`` keeps the per-replication
    output in replication order for each config.
    """

    summary: list[dict]
    risk: list[dict]
    records: list[list[ReplicationRecord]] = field(default_factory=list, repr=False)

    def row(self, config_index: int = 0, rule: str = "mhat_plus_one", band: str = "proposed") -> dict:
        for r in self.summary:
            if r["config"] == config_index and r["rule"] == rule and r["band"] == band:
                return r
        raise KeyError((config_index, rule, band))

    def oracle_cutoff(self, config_index: int = 0) -> int:
        rows = [r for r in self.risk if r["config"] == config_index]
        return min(rows, key=lambda r: (r["rmse"], r["m"]))["m"]


def _config_fields(cfg: DgpConfig) -> dict:
    d = asdict(cfg)
    d.pop("seed")
    return d


def summarise(cfgs, records_by_config, tau1, tau2, rules) -> StudyResult:
    summary, risk = [], []
    for ci, (cfg, records) in enumerate(zip(cfgs, records_by_config)):
        base = {"config": ci, **_config_fields(cfg), "tau1": tau1, "tau2": tau2, "R": len(records)}
        sq = np.vstack([r.sq_errors for r in records])
        rmse = np.sqrt(sq.mean(axis=0))
        cands = records[0].candidates
        m_star = cands[int(np.argmin(rmse))]
        for m, value in zip(cands, rmse):
            risk.append({**base, "m": m, "rmse": float(value), "oracle_m": m_star})
        for rule in rules:
            outs = [r.outcome(rule) for r in records]
            mean_m = float(np.mean([o.m for o in outs]))
            rule_rmse = float(np.sqrt(np.mean([o.sq_error for o in outs])))
            ball = float(np.mean([o.ball_member for o in outs]))
            for kind in ("proposed", "ms"):
                bands = [getattr(o, kind) for o in outs]
                summary.append(
                    {
                        **base,
                        "rule": rule,
                        "band": kind,
                        "ucp": float(np.mean([b.ucp for b in bands])),
                        "mcp": float(np.mean([b.mcp for b in bands])),
                        "max_width": float(np.mean([b.max_width for b in bands])),
                        "mean_width": float(np.mean([b.mean_width for b in bands])),
                        "mean_m": mean_m,
                        "rmse": rule_rmse,
                        "ball_coverage": ball,
                        "oracle_m": m_star,
                    }
                )
    return StudyResult(summary, risk, list(records_by_config))


def _run_chunk(args):
    cfg, reps, kwargs = args
    with threadpool_limits(1):
        return [run_replication(cfg, rep_index=i, **kwargs) for i in reps]


def worker_count(requested: int | None) -> int:
    """Requested worker count capped by the ``FPCA_BAND_THREADS`` environment variable."""
    n = requested if requested is not None else (os.cpu_count() or 1)
    cap = os.environ.get(THREADS_ENV)
    if cap:
        n = min(n, int(cap))
    return max(1, n)


def run_study(
    configs,
    R: int,
    tau1: float = 0.1,
    tau2: float = 0.1,
    rules=RULES,
    draws: int = 20_000,
    candidates=DEFAULT_CANDIDATES,
    workers: int | None = 1,
    chunk_size: int = 25,
) -> StudyResult:
    """Run ``R`` replications for every config and aggregate in replication order."""
    if R < 2:
        raise ValueError(f"need at least 2 replications, got {R}")
    cfgs = [configs] if isinstance(configs, DgpConfig) else list(configs)
    kwargs = dict(tau1=tau1, tau2=tau2, rules=tuple(rules), draws=draws, candidates=tuple(candidates))
    jobs = []
    for ci, cfg in enumerate(cfgs):
        for start in range(0, R, chunk_size):
            jobs.append((ci, (cfg, range(start, min(R, start + chunk_size)), kwargs)))

    nworkers = worker_count(workers)
    if nworkers == 1:
        results = [_run_chunk(job) for _, job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=nworkers) as pool:
            results = list(pool.map(_run_chunk, [job for _, job in jobs]))

    by_config = [[] for _ in cfgs]
    for (ci, _), chunk in zip(jobs, results):
        by_config[ci].extend(chunk)
    return summarise(cfgs, by_config, tau1, tau2, tuple(rules))


STUDY_ALPHAS = (1.1, 2.0)
STUDY_BETAS = (2.6, 3.2)
STUDY_SIZES = tuple(range(100, 1001, 100))


def preset(name: str, seed: int = 0) -> tuple[list[DgpConfig], dict]:
    """Named study configurations and their run settings.

    ``paper-small`` is a single desk-scale configuration; ``paper-full`` is the
    complete grid of sample sizes, decay rates and noise laws.
    """
    if name == "paper-small":
        return [DgpConfig(500, 2.0, 3.2, "gaussian", seed=seed)], {"R": 500, "draws": 20_000}
    if name == "paper-full":
        cfgs = [
            DgpConfig(n, a, b, noise, seed=seed)
            for noise in NOISE_KINDS
            for a in STUDY_ALPHAS
            for b in STUDY_BETAS
            for n in STUDY_SIZES
        ]
        return cfgs, {"R": 2000, "draws": 100_000}
    if name == "smoke":
        return [DgpConfig(200, 2.0, 3.2, "gaussian", seed=seed)], {"R": 20, "draws": 2000}
    raise ValueError(f"unknown preset {name!r}")


def with_domain(cfg: DgpConfig, lower: float, upper: float) -> DgpConfig:
    return replace(cfg, lower=lower, upper=upper)
