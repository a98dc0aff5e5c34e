"""Command-line interface.

Examples
--------
    fpcaband fit --data tecator.csv --m 5
    fpcaband band --data tecator.csv --m 5 --tau1 0.1 --tau2 0.1 --seed 7 --out band.csv
    fpcaband select-cutoff --data tecator.csv
    fpcaband risk-curve --data tecator.csv --out risk.csv
    fpcaband simulate --preset paper-small --out study.csv
    fpcaband convert-tecator --data tecator.txt --out tecator.csv

Exit status is 0 on success, 2 for configuration errors and 1 for failures
while running.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, dataclass, fields

from . import io as fio
from .band import DEFAULT_DRAWS, build_band, ms_band, simulate_quantile
from .cutoff import DEFAULT_CANDIDATES, RULES, risk_curve, select_cutoff
from .regression import fit
from .simulation import preset, run_study

MODES = ("fit", "band", "select-cutoff", "risk-curve", "simulate", "convert-tecator")


class ConfigError(Exception):
    pass


@dataclass
class RunConfig:
    mode: str | None = None
    data: str | None = None
    m: int | None = None
    rule: str = "mhat_plus_one"
    tau1: float = 0.1
    tau2: float = 0.1
    B: int | None = None
    seed: int = 0
    candidates: tuple[int, ...] = DEFAULT_CANDIDATES
    lower: float | None = None
    upper: float | None = None
    out: str | None = None
    preset: str = "paper-small"
    kind: str = "proposed"
    R: int | None = None
    workers: int | None = 1

    def validate(self) -> None:
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {', '.join(MODES)}")
        for name in ("tau1", "tau2"):
            v = getattr(self, name)
            if not 0 < v < 1:
                raise ConfigError(f"{name} must lie in (0, 1), got {v}")
        if self.rule not in RULES:
            raise ConfigError(f"rule must be one of {RULES}")
        if self.kind not in ("proposed", "ms"):
            raise ConfigError("kind must be 'proposed' or 'ms'")
        if self.m is not None and self.m < 1:
            raise ConfigError("m must be a positive integer")
        if self.B is not None and self.B < 1000:
            raise ConfigError("B must be at least 1000")
        if not self.candidates or min(self.candidates) < 1:
            raise ConfigError("candidates must be positive integers")
        if self.mode not in ("simulate",) and not self.data:
            raise ConfigError(f"mode {self.mode} needs --data")
        if self.mode == "convert-tecator" and not self.out:
            raise ConfigError("convert-tecator needs --out")
        if (self.lower is None) != (self.upper is None):
            raise ConfigError("--lower and --upper must be given together")


def _candidates(text: str) -> tuple[int, ...]:
    text = text.strip()
    if "-" in text and "," not in text:
        a, b = text.split("-")
        return tuple(range(int(a), int(b) + 1))
    return tuple(int(t) for t in text.split(",") if t.strip())


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="fpcaband", description="PCA-based confidence bands for functional linear regression.")
    p.add_argument("mode_pos", nargs="?", metavar="mode", help=" | ".join(MODES))
    p.add_argument("--mode", dest="mode_flag")
    p.add_argument("--config", help="JSON file of option defaults; flags override it")
    p.add_argument("--data")
    p.add_argument("--m", type=int)
    p.add_argument("--rule", choices=RULES)
    p.add_argument("--tau1", type=float)
    p.add_argument("--tau2", type=float)
    p.add_argument("--B", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--candidates", type=_candidates, help="e.g. 1-10 or 1,2,3")
    p.add_argument("--lower", type=float, help="domain lower bound (overrides file)")
    p.add_argument("--upper", type=float, help="domain upper bound (overrides file)")
    p.add_argument("--out")
    p.add_argument("--preset")
    p.add_argument("--kind", choices=("proposed", "ms"), help="band type for mode band")
    p.add_argument("--R", type=int, help="replications for mode simulate")
    p.add_argument("--workers", type=int)
    return p


def load_config(argv) -> RunConfig:
    args = build_parser().parse_args(argv)
    cfg = RunConfig()
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                raw = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
        known = {f.name for f in fields(RunConfig)}
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        for k, v in raw.items():
            setattr(cfg, k, tuple(v) if k == "candidates" else v)
    if args.mode_pos and args.mode_flag and args.mode_pos != args.mode_flag:
        raise ConfigError(f"conflicting modes {args.mode_pos!r} and {args.mode_flag!r}")
    mode = args.mode_pos or args.mode_flag
    if mode:
        cfg.mode = mode
    for name in ("data", "m", "rule", "tau1", "tau2", "B", "seed", "candidates", "lower", "upper", "out", "preset", "kind", "R", "workers"):
        v = getattr(args, name)
        if v is not None:
            setattr(cfg, name, v)
    cfg.validate()
    return cfg


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", newline="", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _read(cfg: RunConfig):
    return fio.read_dataset(cfg.data, cfg.lower, cfg.upper)


def _cutoff(cfg: RunConfig, data) -> int:
    if cfg.m is not None:
        return cfg.m
    return select_cutoff(risk_curve(data, cfg.candidates), cfg.rule)


def _record(cfg: RunConfig) -> dict:
    d = asdict(cfg)
    d["candidates"] = list(cfg.candidates)
    d.pop("out")
    d.pop("workers")
    return d


def cmd_fit(cfg: RunConfig) -> None:
    data = _read(cfg)
    m = _cutoff(cfg, data)
    f = fit(data, m)
    lines = [f"n={f.n}", f"m={f.m}", f"sigma2={fio.fmt(f.sigma2)}", f"intercept={fio.fmt(f.intercept)}"]
    lines += [f"b_{j}={fio.fmt(c)}" for j, c in enumerate(f.coefficients, start=1)]
    if f.gamma is not None:
        lines += [f"gamma_{k}={fio.fmt(g)}" for k, g in enumerate(f.gamma, start=1)]
    _emit("\n".join(lines) + "\n", cfg.out)


def cmd_band(cfg: RunConfig) -> None:
    data = _read(cfg)
    m = _cutoff(cfg, data)
    f = fit(data, m)
    draws = cfg.B or DEFAULT_DRAWS
    meta = fio.provenance(_record(cfg))
    if cfg.kind == "ms":
        band, q = ms_band(f, cfg.tau1), None
    else:
        q = simulate_quantile(f.kappas, cfg.tau1, draws, seed=cfg.seed)
        band = build_band(f, q, cfg.tau2)
    out = cfg.out or "band.csv"
    fio.emit_band(band, f, out, quantile=q, meta={k: meta[k] for k in ("version", "config_hash")})
    print(f"wrote {out} (m={m}, sigma2={fio.fmt(f.sigma2)})")


def cmd_select(cfg: RunConfig) -> None:
    data = _read(cfg)
    curve = risk_curve(data, cfg.candidates)
    lines = [f"mhat={curve.argmin}"] + [f"{r}={select_cutoff(curve, r)}" for r in RULES]
    _emit("\n".join(lines) + "\n", cfg.out)


def cmd_risk(cfg: RunConfig) -> None:
    data = _read(cfg)
    curve = risk_curve(data, cfg.candidates)
    meta = fio.provenance(_record(cfg))
    out = cfg.out or "risk.csv"
    fio.write_risk_curve(curve, out, meta={k: meta[k] for k in ("version", "config_hash")})
    print(f"wrote {out} (mhat={curve.argmin})")


def cmd_simulate(cfg: RunConfig) -> None:
    try:
        cfgs, settings = preset(cfg.preset, seed=cfg.seed)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    R = cfg.R or settings["R"]
    draws = cfg.B or settings["draws"]
    result = run_study(cfgs, R, cfg.tau1, cfg.tau2, draws=draws, candidates=cfg.candidates, workers=cfg.workers)
    rec = _record(cfg)
    rec.update(R=R, B=draws)
    meta = fio.provenance(rec)
    out = cfg.out or "study.csv"
    rmse = fio.write_study(result, out, meta)
    print(f"wrote {out} and {rmse}")


def cmd_convert(cfg: RunConfig) -> None:
    data = fio.convert_tecator(cfg.data, cfg.out)
    print(f"wrote {cfg.out} (n={data.n}, p={data.domain.p})")


COMMANDS = {
    "fit": cmd_fit,
    "band": cmd_band,
    "select-cutoff": cmd_select,
    "risk-curve": cmd_risk,
    "simulate": cmd_simulate,
    "convert-tecator": cmd_convert,
}


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    if any(a in ("-h", "--help") for a in argv):
        build_parser().print_help()
        return 0
    try:
        cfg = load_config(argv)
        COMMANDS[cfg.mode](cfg)
    except ConfigError as exc:
        print(f"fpcaband: error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"fpcaband: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
