"""Command-line front end: ``leeyang {zeros,scan,detect,qfim,critical,verify,report}``.

Exit codes: 0 success, 2 solver non-convergence, 3 verification failure,
4 bad configuration.  Output is deterministic for a fixed configuration.
The parallelism degree comes from LEEYANG_WORKERS (default: all cores).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import __version__
from ._suites import (conjugate_pairing, desk_matrix, evolution_draws, fd_draws, spec_reports,
                      theorem1_suite, theorem4_suite, vieta_suite)
from .errors import BracketInvalid, DegenerateZero, EmptyScan, LeeYangError, NonConvergence
from .model import ModelSpec
from .probe import (BETA_H_POINTS, BETA_H_RANGE, DETECTION_THRESHOLD, LAMBDA_T_POINTS, MATCH_TOL,
                    VANISH_TOL, QubitSpec, amplitude_ratio, scan_joint, scan_time)
from .qfim import at_zero_form, qfim_exact, qfim_small_beta_gamma
from .rootfinder import (ON_CIRCLE_TOL, find_critical_beta_gamma, unit_circle_deviation,
                         vieta_log_norm_product, zeros_of)

SCHEMA_VERSION = 1

EXIT_OK, EXIT_NONCONVERGENCE, EXIT_VERIFY, EXIT_CONFIG = 0, 2, 3, 4


class ConfigError(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    command: str
    spins: int = 4
    nonlinearity: int = 4
    beta_gamma: tuple[float, ...] = (1.0,)
    beta_h: float = 0.0
    beta_gamma_range: tuple[float, float] | None = None
    beta_gamma_points: int = 201
    lambda_t_points: int = LAMBDA_T_POINTS
    beta_h_range: tuple[float, float] = BETA_H_RANGE
    beta_h_points: int = BETA_H_POINTS
    threshold: float = DETECTION_THRESHOLD
    tol: float = 1e-12
    format: str = "json"
    out: str | None = None
    heatmap: str | None = None
    seed: int = 0
    norms: bool = False
    at_zeros: bool = False
    theorem: int | None = None
    t: float = 1.0
    lam: float = 0.5
    beta: float = 1.0
    sweep: str = "time"
    sweep_range: tuple[float, float] = (0.0, 3.0)
    sweep_points: int = 61
    method: str = "exact"
    freeze_zeros: bool = False
    zero_drift: bool = False
    bracket: tuple[float, float] = (-1.0, 1.0)
    on_circle_tol: float = ON_CIRCLE_TOL
    profile_points: int = 101
    draws: int = 50

    def spec(self, beta_gamma: float | None = None, beta_h: float | None = None) -> ModelSpec:
        return ModelSpec(self.spins, self.nonlinearity,
                         self.beta_gamma[0] if beta_gamma is None else beta_gamma,
                         self.beta_h if beta_h is None else beta_h)

    def beta_gamma_values(self) -> list[float]:
        if self.beta_gamma_range is None:
            return list(self.beta_gamma)
        lo, hi = self.beta_gamma_range
        return [float(x) for x in np.linspace(lo, hi, self.beta_gamma_points)]

    def validate(self):
        if self.spins < 1 or self.nonlinearity < 1:
            raise ConfigError("--spins and --nonlinearity must be >= 1")
        if not 0 < self.threshold < 1:
            raise ConfigError("--threshold must lie in (0, 1)")
        if not 0 < self.tol <= 1e-4:
            raise ConfigError("--tol must lie in (0, 1e-4]")
        if self.lambda_t_points < 3 or self.beta_h_points < 1 or self.sweep_points < 1:
            raise ConfigError("grid point counts are too small")
        if self.beta_h_points > 1 and not self.beta_h_range[0] < self.beta_h_range[1]:
            raise ConfigError("--beta-h-range must satisfy low < high")
        if self.beta_gamma_range is not None and self.beta_gamma_points < 1:
            raise ConfigError("--beta-gamma-points must be >= 1")
        if not self.beta > 0:
            raise ConfigError("--beta must be positive")
        if self.t < 0:
            raise ConfigError("--t must be non-negative")
        if not all(map(math.isfinite, (*self.beta_gamma, self.beta_h))):
            raise ConfigError("couplings must be finite")
        if self.command == "detect" and len(self.beta_gamma) != 1:
            raise ConfigError("detect takes exactly one --beta-gamma")
        if self.command == "critical" and self.nonlinearity % 2:
            raise ConfigError("critical search needs an even --nonlinearity")
        if self.command == "report" and not self.out:
            raise ConfigError("report needs --out DIR")


# -- helpers --------------------------------------------------------------------

def worker_count() -> int:
    raw = os.environ.get("LEEYANG_WORKERS")
    if raw is None:
        return os.cpu_count() or 1
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"LEEYANG_WORKERS must be an integer, got {raw!r}") from None
    if n < 1:
        raise ConfigError("LEEYANG_WORKERS must be >= 1")
    return n


def parallel_map(func, items: list, workers: int) -> list:
    """Order-preserving map; results do not depend on the worker count."""
    if workers <= 1 or len(items) < 2:
        return [func(x) for x in items]
    with ProcessPoolExecutor(max_workers=min(workers, len(items))) as pool:
        return list(pool.map(func, items, chunksize=max(1, len(items) // (4 * workers))))


def _clean(obj):
    """JSON-safe copy: complex -> {re, im}, non-finite floats -> strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": _clean(obj.real), "im": _clean(obj.imag)}
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return None
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    return obj


def dump_json(payload: dict) -> str:
    body = {"schema_version": SCHEMA_VERSION, **payload}
    return json.dumps(_clean(body), indent=2, allow_nan=False) + "\n"


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return "%.17g" % v
    if v is None:
        return ""
    return str(v)


def dump_csv(header: list[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue()


def emit(text: str, path: str | None):
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(text)


def _model(cfg: RunConfig, beta_gamma: float) -> dict:
    return {"N": cfg.spins, "k": cfg.nonlinearity, "beta_gamma": beta_gamma}


def _config_dict(cfg: RunConfig) -> dict:
    d = asdict(cfg)
    d.pop("out")
    d.pop("heatmap")
    return d


# -- zeros ----------------------------------------------------------------------

def _zero_record(args) -> dict:
    spins, k, bg, tol, seed = args
    spec = ModelSpec(spins, k, bg)
    zs = zeros_of(spec, tol=tol, seed=seed)
    order = np.lexsort((zs.log_zeros.imag, zs.log_zeros.real))
    measured, predicted = vieta_log_norm_product(zs, spec)
    zeros = []
    for i in order:
        z = zs.zeros[i]
        zeros.append({"re": float(z.real), "im": float(z.imag), "norm": float(zs.norms[i]),
                      "log_norm": float(zs.log_norms[i]), "residual": float(zs.residuals[i]),
                      "multiplicity": zs.multiplicity(int(i))})
    return {"beta_gamma": bg, "zeros": zeros, "log_norm_product": measured,
            "predicted_log_norm_product": predicted,
            "unit_circle_deviation": unit_circle_deviation(zs),
            "conjugate_pairing_error": conjugate_pairing(zs)}


def cmd_zeros(cfg: RunConfig) -> int:
    values = cfg.beta_gamma_values()
    jobs = [(cfg.spins, cfg.nonlinearity, bg, cfg.tol, cfg.seed) for bg in values]
    sets = parallel_map(_zero_record, jobs, worker_count())
    if cfg.norms:
        # one curve per zero label: zeros sorted by norm, then argument
        rows = []
        for s in sets:
            norms = sorted(z["norm"] for z in s["zeros"])
            rows.extend((s["beta_gamma"], j + 1, n) for j, n in enumerate(norms))
        if cfg.format == "csv":
            emit(dump_csv(["beta_gamma", "zero", "norm"], rows), cfg.out)
        else:
            curves = {str(j + 1): [r[2] for r in rows if r[1] == j + 1] for j in range(cfg.spins)}
            emit(dump_json({"model": {"N": cfg.spins, "k": cfg.nonlinearity}, "beta_gamma": values,
                            "norms": curves}), cfg.out)
        return EXIT_OK
    if cfg.format == "csv":
        rows = [(s["beta_gamma"], j, z["re"], z["im"], z["norm"], z["residual"], z["multiplicity"])
                for s in sets for j, z in enumerate(s["zeros"])]
        emit(dump_csv(["beta_gamma", "index", "re", "im", "norm", "residual", "multiplicity"], rows),
             cfg.out)
    else:
        emit(dump_json({"model": {"N": cfg.spins, "k": cfg.nonlinearity}, "zero_sets": sets}), cfg.out)
    return EXIT_OK


# -- scan / detect ----------------------------------------------------------------

def _hit_dict(hit, zeros) -> dict:
    zero = None
    if hit.matched_zero is not None:
        z = zeros.zeros[hit.matched_zero]
        zero = {"re": float(z.real), "im": float(z.imag)}
    return {"lambda_t": hit.lambda_t, "beta_h": hit.beta_h, "amplitude": hit.amplitude,
            "vanishing": hit.vanishing, "multiplicity": hit.multiplicity,
            "recovered_z": {"re": hit.recovered_z.real, "im": hit.recovered_z.imag},
            "zero": zero, "matched_index": hit.matched_zero}


def _thresholds(cfg: RunConfig) -> dict:
    return {"threshold": cfg.threshold, "vanish_tol": VANISH_TOL, "match_tol": MATCH_TOL}


def _time_trace(args):
    spins, k, bg, bh, points, threshold, tol, seed = args
    spec = ModelSpec(spins, k, bg, bh)
    grid = np.linspace(0.0, math.pi, points)
    amp = amplitude_ratio(spec, grid)
    zs = zeros_of(spec, tol=tol, seed=seed)
    try:
        hits = scan_time(spec, points, threshold, zeros=zs)
    except EmptyScan:
        hits = []
    return grid, amp, [_hit_dict(h, zs) for h in hits]


def cmd_scan(cfg: RunConfig) -> int:
    jobs = [(cfg.spins, cfg.nonlinearity, bg, cfg.beta_h, cfg.lambda_t_points, cfg.threshold,
             cfg.tol, cfg.seed) for bg in cfg.beta_gamma_values()]
    results = parallel_map(_time_trace, jobs, worker_count())
    if cfg.format == "csv":
        rows = [(j[2], x, a) for j, (grid, amp, _) in zip(jobs, results) for x, a in zip(grid, amp)]
        emit(dump_csv(["beta_gamma", "lambda_t", "amplitude"], rows), cfg.out)
    else:
        traces = [{"beta_gamma": j[2], "beta_h": cfg.beta_h, "min_amplitude": float(amp.min()),
                   "hits": hits} for j, (_, amp, hits) in zip(jobs, results)]
        emit(dump_json({"model": {"N": cfg.spins, "k": cfg.nonlinearity}, **_thresholds(cfg),
                        "traces": traces}), cfg.out)
    return EXIT_OK


def heatmap_csv(scan) -> str:
    bh = np.repeat(scan.beta_h, len(scan.lambda_t))
    lt = np.tile(scan.lambda_t, len(scan.beta_h))
    return dump_csv(["beta_h", "lambda_t", "amplitude"], zip(bh, lt, scan.amplitude.ravel()))


def detect_payload(cfg: RunConfig, spec: ModelSpec):
    zs = zeros_of(spec, tol=cfg.tol, seed=cfg.seed)
    scan = scan_joint(spec, cfg.beta_h_range, cfg.beta_h_points, cfg.lambda_t_points,
                      cfg.threshold, zeros=zs, workers=worker_count())
    payload = {"model": _model(cfg, spec.beta_gamma), **_thresholds(cfg),
               "hits": [_hit_dict(h, zs) for h in scan.hits],
               "predicted": [{"matched_index": i, "beta_h": b, "lambda_t": l}
                             for i, b, l in scan.predicted]}
    return payload, scan


def cmd_detect(cfg: RunConfig) -> int:
    payload, scan = detect_payload(cfg, cfg.spec())
    if cfg.heatmap:
        emit(heatmap_csv(scan), cfg.heatmap)
    if cfg.format == "csv":
        emit(heatmap_csv(scan), cfg.out)
    else:
        emit(dump_json(payload), cfg.out)
    return EXIT_OK


# -- qfim -----------------------------------------------------------------------

QFIM_HEADER = ["t", "lambda", "beta", "beta_gamma", "beta_h", "f_ll", "f_bb", "f_lb", "regime",
               "status"]


def _qfim_row(args):
    spins, k, bg, bh, t, lam, beta, method, freeze = args
    spec = ModelSpec(spins, k, bg, bh)
    status = "ok"
    try:
        if method == "exact":
            q = qfim_exact(spec, QubitSpec(), t, lam, beta, freeze_zeros=freeze)
        else:
            q = qfim_small_beta_gamma(spec, t, lam, beta, branch=method.split("-")[1])
            if not q.valid:
                status = "outside-regime"
    except DegenerateZero as exc:
        return (t, lam, beta, bg, bh, math.nan, math.nan, math.nan, "at-zero", f"degenerate: {exc}")
    return (t, lam, beta, bg, bh, q.f_ll, q.f_bb, q.f_lb, q.regime, status)


def _at_zero_rows(cfg: RunConfig) -> list[tuple]:
    rows = []
    for bg in cfg.beta_gamma_values():
        spec = cfg.spec(beta_gamma=bg)
        zs = zeros_of(spec, tol=cfg.tol, seed=cfg.seed)
        for m in range(len(zs)):
            z = zs.zeros[m]
            try:
                f = at_zero_form(spec, m, cfg.t, cfg.beta, zero_drift=cfg.zero_drift, zeros=zs)
            except DegenerateZero:
                rows.append((bg, m, z.real, z.imag, -float(zs.log_norms[m]),
                             float((-zs.log_zeros[m].imag / 2) % math.pi), cfg.t, cfg.beta,
                             0.0, 0.0, 0.0, math.nan, math.nan, "degenerate"))
                continue
            q = f.qfim
            rows.append((bg, m, z.real, z.imag, f.beta_h, f.lambda_t, cfg.t, cfg.beta,
                         q.f_ll, q.f_bb, q.f_lb, f.log_ratio, f.denominator_phase, "ok"))
    return rows


AT_ZERO_HEADER = ["beta_gamma", "zero", "re", "im", "beta_h", "lambda_t", "t", "beta", "f_ll",
                  "f_bb", "f_lb", "log_ratio", "denominator_phase", "status"]


def cmd_qfim(cfg: RunConfig) -> int:
    if cfg.at_zeros:
        rows = _at_zero_rows(cfg)
        header = AT_ZERO_HEADER
    else:
        lo, hi = cfg.sweep_range
        axis = np.linspace(lo, hi, cfg.sweep_points) if cfg.sweep_points > 1 else np.array([lo])
        jobs = []
        for bg in cfg.beta_gamma_values():
            for x in axis:
                t, bh, g = cfg.t, cfg.beta_h, bg
                if cfg.sweep == "time":
                    t = float(x)
                elif cfg.sweep == "beta_h":
                    bh = float(x)
                else:
                    g = float(x)
                jobs.append((cfg.spins, cfg.nonlinearity, g, bh, t, cfg.lam, cfg.beta, cfg.method,
                             cfg.freeze_zeros))
            if cfg.sweep == "beta_gamma":
                break
        rows = parallel_map(_qfim_row, jobs, worker_count())
        header = QFIM_HEADER
    if cfg.format == "csv":
        emit(dump_csv(header, rows), cfg.out)
    else:
        emit(dump_json({"model": {"N": cfg.spins, "k": cfg.nonlinearity},
                        "rows": [dict(zip(header, r)) for r in rows]}), cfg.out)
    return EXIT_OK


# -- critical -------------------------------------------------------------------

def cmd_critical(cfg: RunConfig) -> int:
    res = find_critical_beta_gamma(cfg.spins, cfg.nonlinearity, cfg.on_circle_tol, cfg.bracket,
                                   profile_points=cfg.profile_points)
    if cfg.format == "csv":
        emit(dump_csv(["beta_gamma", "unit_circle_deviation"], res.deviation_profile), cfg.out)
    else:
        emit(dump_json({"model": {"N": cfg.spins, "k": cfg.nonlinearity},
                        "beta_gamma_critical": res.beta_gamma_critical,
                        "bracket": list(res.bracket), "on_circle_tol": res.on_circle_tol,
                        "deviation_profile": [{"beta_gamma": b, "deviation": d}
                                              for b, d in res.deviation_profile]}), cfg.out)
    return EXIT_OK


# -- verify ---------------------------------------------------------------------

def _spec_bundle(spec: ModelSpec) -> dict:
    return {"N": spec.spins, "k": spec.nonlinearity, "beta_gamma": spec.beta_gamma,
            "beta_h": spec.beta_h, "reports": [r.to_dict() for r in spec_reports(spec)]}


def verify_bundle(cfg: RunConfig) -> dict:
    suites: dict[str, list] = {}
    if cfg.theorem in (None, 1):
        suites["theorem1"] = theorem1_suite()
    if cfg.theorem in (None, 2):
        suites["theorem2"] = vieta_suite(odd=True, draws=cfg.draws, seed=cfg.seed)
    if cfg.theorem in (None, 3):
        suites["theorem3"] = vieta_suite(odd=False, draws=cfg.draws, seed=cfg.seed)
    if cfg.theorem in (None, 4):
        suites["theorem4"] = theorem4_suite()
    if cfg.theorem is None:
        suites["oracle_matrix"] = parallel_map(_spec_bundle, desk_matrix(), worker_count())
        suites["evolution"] = evolution_draws(seed=cfg.seed + 1)
        suites["finite_difference"] = fd_draws(draws=cfg.draws, seed=cfg.seed + 2)
    summary = {}
    for name, rows in suites.items():
        if name == "oracle_matrix":
            flat = [r for b in rows for r in b["reports"]]
            summary[name] = {"total": len(flat), "failed": sum(not r["pass"] for r in flat),
                             "skipped": sum(bool(r["skipped"]) for r in flat)}
        else:
            summary[name] = {"total": len(rows), "failed": sum(not r["pass"] for r in rows)}
    return {"all_pass": all(s["failed"] == 0 for s in summary.values()), "summary": summary,
            "suites": suites}


def cmd_verify(cfg: RunConfig) -> int:
    bundle = verify_bundle(cfg)
    emit(dump_json(bundle), cfg.out)
    return EXIT_OK if bundle["all_pass"] else EXIT_VERIFY


# -- report ---------------------------------------------------------------------

def cmd_report(cfg: RunConfig) -> int:
    """Write the standard zero, norm, detection and at-zero QFIM datasets into --out."""
    out = Path(cfg.out)
    files = []

    def put(name, text):
        emit(text, str(out / name))
        files.append(name)

    small = (-0.05, -0.01, 0.01, 0.05)
    for k in (3, 4):
        for n in (6, 7, 10):
            sub = RunConfig("zeros", spins=n, nonlinearity=k, beta_gamma=small,
                            tol=cfg.tol, seed=cfg.seed, format="csv", out=str(out / f"zeros_k{k}_N{n}.csv"))
            cmd_zeros(sub)
            files.append(f"zeros_k{k}_N{n}.csv")
    for n in (3, 4, 5, 6):
        sub = RunConfig("zeros", spins=n, nonlinearity=4, beta_gamma_range=(-1.0, 1.0),
                        beta_gamma_points=201, norms=True, tol=cfg.tol, seed=cfg.seed,
                        format="csv", out=str(out / f"norms_k4_N{n}.csv"))
        cmd_zeros(sub)
        files.append(f"norms_k4_N{n}.csv")
    for n, bg_detect in ((4, 1.0), (5, 0.5)):
        for k in (2, 3, 4, 5):
            sub = RunConfig("scan", spins=n, nonlinearity=k, beta_gamma=(-1.0, -0.1, 0.1, 1.0),
                            lambda_t_points=cfg.lambda_t_points, threshold=cfg.threshold,
                            tol=cfg.tol, seed=cfg.seed, format="csv",
                            out=str(out / f"detect_N{n}_k{k}_traces.csv"))
            cmd_scan(sub)
            files.append(f"detect_N{n}_k{k}_traces.csv")
        sub = RunConfig("detect", spins=n, nonlinearity=4, beta_gamma=(bg_detect,),
                        lambda_t_points=cfg.lambda_t_points, beta_h_range=cfg.beta_h_range,
                        beta_h_points=cfg.beta_h_points, threshold=cfg.threshold, tol=cfg.tol,
                        seed=cfg.seed)
        payload, scan = detect_payload(sub, sub.spec())
        put(f"detect_N{n}_k4_hits.json", dump_json(payload))
        put(f"detect_N{n}_k4_heatmap.csv", heatmap_csv(scan))
        sub = RunConfig("qfim", spins=n, nonlinearity=4, beta_gamma=(bg_detect,), t=cfg.t,
                        beta=cfg.beta, at_zeros=True, tol=cfg.tol, seed=cfg.seed, format="csv",
                        out=str(out / f"qfim_N{n}_k4_at_zeros.csv"))
        cmd_qfim(sub)
        files.append(f"qfim_N{n}_k4_at_zeros.csv")
    put("index.json", dump_json({"files": sorted(files), "config": _config_dict(cfg)}))
    return EXIT_OK


HANDLERS = {"zeros": cmd_zeros, "scan": cmd_scan, "detect": cmd_detect, "qfim": cmd_qfim,
            "critical": cmd_critical, "verify": cmd_verify, "report": cmd_report}


# -- argument parsing -------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    g = common.add_argument_group("model")
    g.add_argument("--spins", "-N", type=int, default=4, help="number of spins N")
    g.add_argument("--nonlinearity", "-k", type=int, default=4, help="exponent k")
    g.add_argument("--beta-gamma", type=float, action="append",
                   help="beta*gamma; repeat for several values (default 1.0)")
    g.add_argument("--beta-gamma-range", type=float, nargs=2, metavar=("LO", "HI"),
                   help="uniform beta*gamma grid instead of --beta-gamma")
    g.add_argument("--beta-gamma-points", type=int, default=201)
    g.add_argument("--beta-h", type=float, default=0.0, help="beta*h")
    g = common.add_argument_group("grids and tolerances")
    g.add_argument("--lambda-t-points", type=int, default=LAMBDA_T_POINTS,
                   help="samples of lambda*t over [0, pi]")
    g.add_argument("--beta-h-range", type=float, nargs=2, default=BETA_H_RANGE,
                   metavar=("LO", "HI"))
    g.add_argument("--beta-h-points", type=int, default=BETA_H_POINTS)
    g.add_argument("--threshold", type=float, default=DETECTION_THRESHOLD,
                   help="detection threshold on |Z~/Z|")
    g.add_argument("--tol", type=float, default=1e-12, help="root residual tolerance")
    g = common.add_argument_group("output")
    g.add_argument("--format", choices=("json", "csv"), default="json")
    g.add_argument("--out", help="output file (directory for report); default stdout")
    g.add_argument("--seed", type=int, default=0, help="start of the retry rotation schedule")

    parser = _Parser(prog="leeyang", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("zeros", parents=[common], help="zero sets per beta*gamma")
    p.add_argument("--norms", action="store_true", help="emit sorted norms versus beta*gamma")

    sub.add_parser("scan", parents=[common], help="|Z~/Z| versus lambda*t at fixed beta*h")

    p = sub.add_parser("detect", parents=[common], help="joint (beta*h, lambda*t) detection")
    p.add_argument("--heatmap", metavar="PATH", help="also write the heatmap CSV here")

    p = sub.add_parser("qfim", parents=[common], help="QFIM sweeps and at-zero closed forms")
    p.add_argument("--t", type=float, default=1.0, help="evolution time")
    p.add_argument("--lambda", dest="lam", type=float, default=0.5, help="coupling lambda")
    p.add_argument("--beta", type=float, default=1.0, help="inverse temperature")
    p.add_argument("--sweep", choices=("time", "beta_h", "beta_gamma"), default="time")
    p.add_argument("--sweep-range", type=float, nargs=2, default=(0.0, 3.0), metavar=("LO", "HI"))
    p.add_argument("--sweep-points", type=int, default=61)
    p.add_argument("--method", choices=("exact", "approx-mixed", "approx-pure"), default="exact")
    p.add_argument("--freeze-zeros", action="store_true",
                   help="differentiate in beta at fixed beta*gamma")
    p.add_argument("--at-zeros", action="store_true", help="closed forms at every zero")
    p.add_argument("--zero-drift", action="store_true",
                   help="at zeros, let the zeros move with beta (fixed gamma) instead of the "
                        "fixed-zero closed form")

    p = sub.add_parser("critical", parents=[common], help="critical beta*gamma by bisection")
    p.add_argument("--bracket", type=float, nargs=2, default=(-1.0, 1.0), metavar=("LO", "HI"))
    p.add_argument("--on-circle-tol", type=float, default=ON_CIRCLE_TOL)
    p.add_argument("--profile-points", type=int, default=101)

    p = sub.add_parser("verify", parents=[common], help="oracle matrix and theorem suites")
    p.add_argument("--theorem", type=int, choices=(1, 2, 3, 4), help="run one suite only: 1 z=-1 is a zero for odd N and even k; "
                        "2 odd-k norm product; 3 even-k norm product; "
                        "4 zeros approach the roots of 1+z**N as beta*gamma -> -inf")
    p.add_argument("--draws", type=int, default=50, help="random draws per suite")

    p = sub.add_parser("report", parents=[common], help="standard datasets into --out DIR")
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument("--beta", type=float, default=1.0)
    return parser


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    d = vars(ns).copy()
    if d.get("beta_gamma") is None:
        d["beta_gamma"] = (1.0,)
    known = RunConfig.__dataclass_fields__
    kwargs = {}
    for key, val in d.items():
        if key in known and val is not None:
            kwargs[key] = tuple(val) if isinstance(val, list) else val
    cfg = RunConfig(**kwargs)
    cfg.validate()
    return cfg


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        cfg = config_from_args(ns)
        return HANDLERS[cfg.command](cfg)
    except (ConfigError, BracketInvalid, ValueError) as exc:
        sys.stderr.write(f"leeyang: bad configuration: {exc}\n")
        return EXIT_CONFIG
    except NonConvergence as exc:
        sys.stderr.write(json.dumps({"error": "NonConvergence", "message": str(exc),
                                     "command": ns.command}) + "\n")
        return EXIT_NONCONVERGENCE
    except LeeYangError as exc:
        sys.stderr.write(f"leeyang: {type(exc).__name__}: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
