"""Command-line orchestration: verify | budget | hardy | evolve | all.

Configuration is plain sectioned key-value text (INI syntax).  All numeric
fields are validated up front against the module preconditions; every
violation is reported, not just the first.  Outputs are one CSV per scan
(columns r, value, margin) plus one deterministic JSON summary per run.

Exit codes: 0 all requested checks pass, 2 configuration problem,
3 numerical instability during evolution, 4 at least one check failed.
"""

from __future__ import annotations

import argparse
import configparser
import math
import os
import sys
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .geometry import BackgroundParams, DomainError, grid_uniform_h
from .multiplier import MultiplierParams, MultiplierProfile
from .verifier import (CASE_IDS, _margins, budget_submargins, region_grid,
                       verify_all)
from .hardy import GaussianBump, hardy_ratio, rho, rho_prime, time_boundary_check
from .evolution import EvolutionConfig, InstabilityError, evolve
from .reporting import (ReportRecord, config_hash, write_json, write_scan_csv,
                        write_series_csv)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INSTABILITY = 3
EXIT_CHECK_FAILED = 4


class ConfigError(ValueError):
    """Bad configuration; carries the full list of violations."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


@dataclass
class RunConfig:
    """Validated parameters for one invocation."""

    mode: str = "verify"
    d_list: tuple = (1,)
    r_s: float = 1.0
    eps: float = 0.05
    delta: float = 0.1
    delta0: float = 0.1
    alpha_override: float | None = None
    grid_points: int = 4096
    refine: bool = False
    seed: int = 0
    out_dir: str = "reports"
    # evolution block
    ell_list: tuple = (0, 1, 2)
    rstar_lo: float = -115.0
    rstar_hi: float = 125.0
    n_points: int = 2401
    dt: float = 1e-3
    t_final: float = 100.0
    data_kind: str = "outgoing"
    center: float = 0.0
    width: float = 1.0
    amplitude: float = 1.0
    # hardy block
    bump_count: int = 10
    bump_lo: float = 1.1
    bump_hi: float = 50.0

    def multiplier_params(self) -> MultiplierParams:
        return MultiplierParams(self.eps, self.delta, self.delta0,
                                self.alpha_override)

    def hashed_payload(self) -> dict:
        # output location does not affect the science; keep it out of the
        # hash so re-running into a different directory reproduces reports
        payload = asdict(self)
        payload.pop("out_dir")
        return payload


_SCHEMA = {
    "background": {"d": "d_list", "r_s": "r_s"},
    "multiplier": {"eps": "eps", "delta": "delta", "delta0": "delta0",
                   "alpha_override": "alpha_override"},
    "grid": {"points": "grid_points", "refine": "refine"},
    "evolution": {"ell": "ell_list", "rstar_lo": "rstar_lo",
                  "rstar_hi": "rstar_hi", "n_points": "n_points", "dt": "dt",
                  "t_final": "t_final", "data_kind": "data_kind",
                  "center": "center", "width": "width",
                  "amplitude": "amplitude"},
    "hardy": {"bump_count": "bump_count", "bump_lo": "bump_lo",
              "bump_hi": "bump_hi"},
    "output": {"out_dir": "out_dir", "seed": "seed"},
}

_INT_LISTS = {"d_list", "ell_list"}
_INTS = {"grid_points", "n_points", "bump_count", "seed"}
_BOOLS = {"refine"}
_STRINGS = {"data_kind", "out_dir"}


def _coerce(field_name: str, raw: str, problems: list):
    raw = raw.strip()
    try:
        if field_name in _INT_LISTS:
            return tuple(int(tok) for tok in raw.replace(",", " ").split())
        if field_name in _INTS:
            return int(raw)
        if field_name in _BOOLS:
            if raw.lower() in ("1", "true", "yes", "on"):
                return True
            if raw.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if field_name in _STRINGS:
            return raw
        if field_name == "alpha_override":
            return None if raw.lower() in ("", "none") else float(raw)
        return float(raw)
    except ValueError:
        problems.append(f"field {field_name}: cannot parse {raw!r}")
        return None


def validate(cfg: RunConfig) -> list:
    """Every violated precondition, as human-readable strings."""
    problems = []
    if cfg.mode not in ("verify", "budget", "hardy", "evolve", "all"):
        problems.append(f"mode must be one of verify/budget/hardy/evolve/all, got {cfg.mode!r}")
    if not cfg.d_list:
        problems.append("d list is empty")
    for d in cfg.d_list:
        if d < 1:
            problems.append(f"d={d}: need d >= 1 (space-time dimension at least 5)")
    if cfg.r_s <= 0:
        problems.append(f"r_s={cfg.r_s}: horizon radius must be positive")
    if not 0 < cfg.eps < 1:
        problems.append(f"eps={cfg.eps}: need 0 < eps < 1")
    if not 0 < cfg.delta < 1:
        problems.append(f"delta={cfg.delta}: need 0 < delta < 1")
    if not 0 < cfg.delta0 < 1:
        problems.append(f"delta0={cfg.delta0}: need 0 < delta0 < 1")
    if cfg.alpha_override is not None and cfg.alpha_override <= 0:
        problems.append(f"alpha_override={cfg.alpha_override}: must be positive")
    if cfg.grid_points < 16:
        problems.append(f"grid points={cfg.grid_points}: need at least 16")
    for ell in cfg.ell_list:
        if ell < 0:
            problems.append(f"ell={ell}: need ell >= 0")
    if cfg.rstar_hi <= cfg.rstar_lo:
        problems.append("empty tortoise range: rstar_hi <= rstar_lo")
    if cfg.n_points < 8:
        problems.append(f"n_points={cfg.n_points}: need at least 8")
    if cfg.dt <= 0 or cfg.t_final <= 0:
        problems.append("dt and t_final must be positive")
    else:
        delta = (cfg.rstar_hi - cfg.rstar_lo) / max(cfg.n_points - 1, 1)
        if cfg.dt > 0.5 * delta + 1e-15:
            problems.append(f"dt={cfg.dt}: CFL requires dt <= 0.5 * spacing = {0.5 * delta:.6g}")
    if cfg.data_kind not in ("outgoing", "symmetric"):
        problems.append(f"data_kind={cfg.data_kind!r}: must be outgoing or symmetric")
    if cfg.width <= 0:
        problems.append(f"width={cfg.width}: must be positive")
    if cfg.bump_count < 2:
        problems.append(f"bump_count={cfg.bump_count}: need at least 2")
    if not cfg.r_s < cfg.bump_lo * cfg.r_s < cfg.bump_hi * cfg.r_s:
        problems.append("bump window must satisfy 1 < bump_lo < bump_hi (units of r_s)")
    return problems


def parse_config(text: str) -> RunConfig:
    """Sectioned key-value text to a fully validated RunConfig."""
    parser = configparser.ConfigParser()
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError([f"parse error: {exc}"]) from exc
    problems: list = []
    values: dict = {}
    for section in parser.sections():
        if section not in _SCHEMA:
            problems.append(f"unknown section [{section}]")
            continue
        for key, raw in parser.items(section):
            if key not in _SCHEMA[section]:
                problems.append(f"unknown key {key!r} in section [{section}]")
                continue
            fname = _SCHEMA[section][key]
            val = _coerce(fname, raw, problems)
            if val is not None or fname == "alpha_override":
                values[fname] = val
    if problems:
        raise ConfigError(problems)
    cfg = RunConfig(**values)
    problems = validate(cfg)
    if problems:
        raise ConfigError(problems)
    return cfg


def _per_point_scan(case_id: str, bg: BackgroundParams, mp: MultiplierParams,
                    n: int):
    """Rows (r, value, margin) for one case scan.

    value is the scanned expression at each radius (min over sub-expressions
    when a case checks several); margin is the same value normalized by the
    scan's maximum magnitude so that CSVs of different cases are comparable.
    """
    grid = region_grid(case_id, bg, mp, n)
    prof = MultiplierProfile(bg, mp)
    m, wr = _margins(case_id, prof, grid)
    m, wr = np.asarray(m, dtype=float), np.asarray(wr, dtype=float)
    if len(m) % len(grid) == 0 and len(m) > len(grid):
        k = len(m) // len(grid)
        m = m.reshape(k, len(grid)).min(axis=0)
        wr = wr[: len(grid)]
    elif len(m) != len(wr):
        raise DomainError("scan produced mismatched arrays")
    scale = float(np.max(np.abs(m))) or 1.0
    return [(float(r), float(v), float(v / scale)) for r, v in zip(wr, m)]


def _run_verify(cfg: RunConfig, out: str, reports: list) -> bool:
    ok = True
    verdicts = []
    for d in cfg.d_list:
        bg = BackgroundParams(d, cfg.r_s)
        mp = cfg.multiplier_params()
        for v in verify_all(bg, mp, n=cfg.grid_points, refine=cfg.refine):
            verdicts.append(v)
            ok &= v.passed
        for cid in CASE_IDS:
            if cid == "budget":
                continue
            rows = _per_point_scan(cid, bg, mp, min(cfg.grid_points, 1024))
            write_scan_csv(os.path.join(out, f"scan_{cid}_d{d}.csv"), rows)
    payload = {"verdicts": [_verdict_dict(v) for v in verdicts]}
    reports.append(("verify", payload))
    return ok


def _verdict_dict(v) -> dict:
    return {"case_id": v.case_id, "d": v.d, "grid_size": v.grid_size,
            "min_margin": v.min_margin, "witness_r": v.witness_r,
            "passed": v.passed,
            "params": {"eps": v.params.eps, "delta": v.params.delta,
                       "delta0": v.params.delta0,
                       "alpha": v.params.alpha}}


def _run_budget(cfg: RunConfig, out: str, reports: list) -> bool:
    ok = True
    summary = {}
    for d in cfg.d_list:
        bg = BackgroundParams(d, cfg.r_s)
        mp = cfg.multiplier_params()
        sub = budget_submargins(bg, mp, cfg.grid_points)
        rows = [(sub[k][1], sub[k][0], sub[k][0]) for k in
                ("absorb", "eps_small", "delta_small")]
        write_scan_csv(os.path.join(out, f"budget_d{d}.csv"), rows)
        entry = {k: {"margin": sub[k][0], "witness_r": sub[k][1]}
                 for k in ("absorb", "eps_small", "delta_small")}
        entry["trace_constants"] = sub["trace_constants"]
        entry["boundary_coefficient"] = sub["boundary_coefficient"]
        summary[f"d={d}"] = entry
        ok &= all(sub[k][0] > 0 for k in ("absorb", "eps_small", "delta_small"))
    reports.append(("budget", summary))
    return ok


def _bump_family(cfg: RunConfig, rng: np.random.Generator):
    centers = np.geomspace(cfg.bump_lo * cfg.r_s, cfg.bump_hi * cfg.r_s,
                           cfg.bump_count)
    centers = centers * np.exp(rng.uniform(-0.02, 0.02, cfg.bump_count))
    for c in centers:
        w = 0.25 * (c - cfg.r_s) if c < 4 * cfg.r_s else 0.2 * c
        yield GaussianBump(float(c), float(w))


def _run_hardy(cfg: RunConfig, out: str, reports: list) -> bool:
    rng = np.random.default_rng(cfg.seed)
    ok = True
    summary = {}
    for d in cfg.d_list:
        bg = BackgroundParams(d, cfg.r_s)
        prof = MultiplierProfile(bg, cfg.multiplier_params())
        rows, ratios, time_ratios = [], [], []
        for bump in _bump_family(cfg, rng):
            hr = hardy_ratio(bump, bg)
            tr = time_boundary_check(bump, bg, prof)
            ratios.append(hr)
            time_ratios.append(tr)
            rows.append((bump.center, hr, tr))
        write_scan_csv(os.path.join(out, f"hardy_d{d}.csv"), rows,
                       header=("r", "hardy_ratio", "time_ratio"))
        spread = max(ratios) / min(ratios)
        summary[f"d={d}"] = {"hardy_ratios": ratios, "time_ratios": time_ratios,
                             "spread": spread}
        ok &= bool(np.isfinite(spread)) and spread <= 10.0
    reports.append(("hardy", summary))
    return ok


def _run_evolve(cfg: RunConfig, out: str, reports: list) -> bool:
    ok = True
    summary = {}
    for d in cfg.d_list:
        bg = BackgroundParams(d, cfg.r_s)
        mp = cfg.multiplier_params()
        for ell in cfg.ell_list:
            econf = EvolutionConfig(bg, mp, (ell,), cfg.rstar_lo, cfg.rstar_hi,
                                    cfg.n_points, cfg.dt, cfg.t_final,
                                    cfg.data_kind, cfg.center, cfg.width,
                                    cfg.amplitude)
            series = evolve(econf, ell=ell)
            write_series_csv(os.path.join(out, f"series_d{d}_ell{ell}.csv"),
                             series)
            e0 = series.energy[0]
            drift = (float(np.max(np.abs(series.energy - e0)) / e0)
                     if e0 > 0 else 0.0)
            ratio = float(series.le_accum[-1] / e0) if e0 > 0 else 0.0
            summary[f"d={d},ell={ell}"] = {
                "energy_initial": float(e0),
                "energy_drift": drift,
                "le_over_e0": ratio,
                "final_base_residual": float(series.base_residual[-1]),
                "boundary_contaminated": bool(series.boundary_contaminated),
            }
            monotone = bool(np.all(np.diff(series.le_accum) >= -1e-15))
            ok &= monotone and not series.boundary_contaminated
    reports.append(("evolve", summary))
    return ok


def run(mode: str, cfg: RunConfig) -> int:
    """Dispatch one validated configuration and write its reports."""
    cfg = replace(cfg, mode=mode)
    problems = validate(cfg)
    if problems:
        for p in problems:
            print(f"config error: {p}", file=sys.stderr)
        return EXIT_CONFIG
    out = cfg.out_dir
    os.makedirs(out, exist_ok=True)
    chash = config_hash(cfg.hashed_payload())
    reports: list = []
    ok = True
    try:
        if mode in ("verify", "all"):
            ok &= _run_verify(cfg, out, reports)
        if mode in ("budget", "all"):
            ok &= _run_budget(cfg, out, reports)
        if mode in ("hardy", "all"):
            ok &= _run_hardy(cfg, out, reports)
        if mode in ("evolve", "all"):
            ok &= _run_evolve(cfg, out, reports)
    except InstabilityError as exc:
        print(f"instability: {exc}", file=sys.stderr)
        return EXIT_INSTABILITY
    except (DomainError, ConfigError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    for kind, payload in reports:
        rec = ReportRecord(kind, payload, {"config_hash": chash})
        write_json(os.path.join(out, f"summary_{kind}.json"), rec)
        print(f"{kind}: {'pass' if ok else 'recorded'} "
              f"-> {os.path.join(out, f'summary_{kind}.json')}")
    return EXIT_OK if ok else EXIT_CHECK_FAILED


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="bhle",
        description="multiplier verification and mode evolution toolkit")
    sub = ap.add_subparsers(dest="mode", required=True)
    for mode in ("verify", "budget", "hardy", "evolve", "all"):
        p = sub.add_parser(mode)
        p.add_argument("--config", metavar="PATH", default=None)
        p.add_argument("--out", metavar="DIR", default=None)
        p.add_argument("--d", metavar="LIST", default=None,
                       help="comma-separated dimension parameters, e.g. 1,2,3")
        p.add_argument("--grid-points", metavar="N", type=int, default=None)
        p.add_argument("--refine", action="store_true", default=None)
        p.add_argument("--seed", metavar="N", type=int, default=None)
    return ap


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    text = ""
    if args.config is not None:
        try:
            with open(args.config, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
    try:
        cfg = parse_config(text)
    except ConfigError as exc:
        for p in exc.problems:
            print(f"config error: {p}", file=sys.stderr)
        return EXIT_CONFIG
    overrides = {}
    if args.out is not None:
        overrides["out_dir"] = args.out
    if args.d is not None:
        try:
            overrides["d_list"] = tuple(int(tok) for tok in
                                        args.d.replace(",", " ").split())
        except ValueError:
            print(f"config error: bad --d list {args.d!r}", file=sys.stderr)
            return EXIT_CONFIG
    if args.grid_points is not None:
        overrides["grid_points"] = args.grid_points
    if args.refine:
        overrides["refine"] = True
    if args.seed is not None:
        overrides["seed"] = args.seed
    cfg = replace(cfg, **overrides)
    problems = validate(cfg)
    if problems:
        for p in problems:
            print(f"config error: {p}", file=sys.stderr)
        return EXIT_CONFIG
    return run(args.mode, cfg)


if __name__ == "__main__":
    sys.exit(main())
