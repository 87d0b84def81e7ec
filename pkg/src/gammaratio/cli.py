"""Batch verification front-end.

    gammaratio eval --matrix '[[1,1]]' --rho 2 --grid 0.1 10 5
    gammaratio ineq-check --dims 3 3 --samples 1000 --seed 42
    gammaratio sharpness --dims 2 2 --samples 10000

Exit status: 0 when every asserted contract held, 2 on a contract violation
(the first violating instance is written as a replayable config), 1 on usage
or I/O errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import cm_harness, combinatorics, inequality, ratio
from .matrix import PositiveMatrix, log_uniform, random_matrix
from .specfun import RangeError

log = logging.getLogger("gammaratio")

COMMANDS = ("eval", "ineq-check", "cm-check", "sharpness", "measure", "combi-check")
STRUCTURED = {"cm-check", "sharpness"}
OUTSIDE = "outside theorem hypotheses"

EXIT_OK, EXIT_USAGE, EXIT_VIOLATION = 0, 1, 2


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    matrix: list | None = None
    dims: list | None = None
    rho: float = 2.0
    samples: int = 1
    seed: int = 0
    grid: list = field(default_factory=lambda: [1e-3, 1e3, 50])
    order: int = 6
    output_format: str | None = None
    output_path: str | None = None
    constant: float = 2.0
    xs: list | None = None
    weights: dict | None = None
    tol: float = 1e-10

    def validate(self):
        if self.command not in COMMANDS:
            raise UsageError(f"unknown command {self.command!r}")
        if (self.matrix is None) == (self.dims is None):
            raise UsageError("exactly one of --matrix / --dims is required")
        if self.command == "sharpness" and self.dims is None:
            raise UsageError("sharpness needs --dims")
        if self.dims is not None and (len(self.dims) != 2 or min(self.dims) < 1):
            raise UsageError("--dims takes two positive integers")
        if self.matrix is not None:
            try:
                PositiveMatrix.from_rows(self.matrix)
            except ValueError as exc:
                raise UsageError(f"bad --matrix: {exc}") from exc
        t_min, t_max, points = self.grid
        if not (0 < t_min < t_max) or int(points) < 2:
            raise UsageError("grid bounds must be positive and increasing with >= 2 points")
        if self.samples < 1:
            raise UsageError("--samples must be >= 1")
        if not 0 <= self.order <= 6:
            raise UsageError("--order must lie in [0, 6]")
        if self.output_format is None:
            self.output_format = "json" if self.command in STRUCTURED else "csv"
        if self.output_format not in ("csv", "json"):
            raise UsageError("--output-format must be csv or json")

    @property
    def t_grid(self) -> np.ndarray:
        t_min, t_max, points = self.grid
        return np.geomspace(t_min, t_max, int(points))


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _parser() -> argparse.ArgumentParser:
    p = _Parser(prog="gammaratio", description="Gamma-ratio verification sweeps.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", help="JSON file with RunConfig fields; flags override it")
    p.add_argument("--matrix", type=json.loads, help="explicit entries as JSON, e.g. '[[1,1]]'")
    p.add_argument("--dims", type=int, nargs=2, metavar=("M", "N"))
    p.add_argument("--rho", type=float)
    p.add_argument("--samples", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--grid", type=float, nargs=3, metavar=("T_MIN", "T_MAX", "POINTS"))
    p.add_argument("--t-min", type=float)
    p.add_argument("--t-max", type=float)
    p.add_argument("--points", type=int)
    p.add_argument("--order", type=int)
    p.add_argument("--output-format", choices=("csv", "json"))
    p.add_argument("--output-path", "--output", dest="output_path")
    p.add_argument("--constant", type=float, help="constant on the right of the inequality")
    p.add_argument("--xs", type=json.loads, help="explicit x values for ineq-check")
    p.add_argument("--tol", type=float)
    return p


def build_config(argv) -> RunConfig:
    args = _parser().parse_args(argv)
    values = {}
    if args.config:
        try:
            values.update(json.loads(Path(args.config).read_text()))
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from exc
    known = {f.name for f in fields(RunConfig)}
    unknown = set(values) - known
    if unknown:
        raise UsageError(f"unknown config keys: {sorted(unknown)}")
    values["command"] = args.command
    for name in known - {"command"}:
        v = getattr(args, name, None)
        if v is not None:
            values[name] = v
    if args.matrix is not None:
        values.pop("dims", None)
    if args.dims is not None:
        values.pop("matrix", None)
    grid = list(values.get("grid", RunConfig.__dataclass_fields__["grid"].default_factory()))
    for i, name in enumerate(("t_min", "t_max", "points")):
        if getattr(args, name) is not None:
            grid[i] = getattr(args, name)
    values["grid"] = [float(grid[0]), float(grid[1]), int(grid[2])]
    cfg = RunConfig(**values)
    cfg.validate()
    return cfg


# --- helpers ---------------------------------------------------------------


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.17g}"
    return str(v)


def _threads() -> int:
    env = os.environ.get("GAMMA_RATIO_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise UsageError("GAMMA_RATIO_THREADS must be an integer") from None
    return os.cpu_count() or 1


def _map(fn, items):
    """Evaluate in worker threads; results come back in input order."""
    items = list(items)
    workers = min(_threads(), max(1, len(items)))
    if workers == 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _matrices(cfg: RunConfig, rng: np.random.Generator) -> list[PositiveMatrix]:
    if cfg.matrix is not None:
        return [PositiveMatrix.from_rows(cfg.matrix)]
    m, n = cfg.dims
    return [random_matrix(rng, m, n) for _ in range(cfg.samples)]


def _replay(cfg: RunConfig, **overrides) -> dict:
    doc = asdict(cfg)
    doc.update(dims=None, samples=1, output_path=None)
    doc.update(overrides)
    return doc


@dataclass
class Report:
    columns: list
    rows: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    structured: object = None
    violations: list = field(default_factory=list)


# --- commands --------------------------------------------------------------


def _eval(cfg: RunConfig, rng) -> Report:
    rep = Report(["sample", "config_hash", "rho", "t", "log_f", "dlog_f", "d2log_f", "status"])
    mats = _matrices(cfg, rng)
    grid = cfg.t_grid

    def work(item):
        idx, mat = item
        rc = ratio.RatioConfig(mat, cfg.rho)
        sup = ratio.sup_limit(rc) if rc.rho == 2.0 else None
        rows, bad = [], []
        for t in grid:
            t = float(t)
            try:
                vals = (ratio.log_f(rc, t), ratio.dlog_f(rc, t), ratio.d2log_f(rc, t))
            except RangeError:
                rows.append([idx, rc.digest(), rc.rho, t, math.nan, math.nan, math.nan,
                             "overflow"])
                continue
            status = "ok" if rc.within_hypotheses else OUTSIDE
            if rc.within_hypotheses:
                ok = vals[2] >= -cfg.tol * max(1.0, abs(vals[2]))
                if sup is not None and not rc.degenerate:
                    ok = ok and -cfg.tol < vals[1] < sup + cfg.tol
                if not ok:
                    status = "violation"
                    bad.append(_replay(cfg, matrix=mat.to_list(), grid=[t, t * 2, 2]))
            rows.append([idx, rc.digest(), rc.rho, t, *vals, status])
        return rows, bad

    for rows, bad in _map(work, enumerate(mats)):
        rep.rows.extend(rows)
        rep.violations.extend(bad)
    rep.summary = {"configs": len(mats), "rows": len(rep.rows),
                   "within_hypotheses": cfg.rho <= 2.0}
    return rep


def _ineq_check(cfg: RunConfig, rng) -> Report:
    rep = Report(["sample", "config_hash", "m", "n", "x", "lhs", "rhs", "margin", "ratio",
                  "status"])
    if cfg.matrix is not None:
        mat = PositiveMatrix.from_rows(cfg.matrix)
        xs = cfg.xs if cfg.xs is not None else cfg.t_grid.tolist()
        instances = [(mat, float(x)) for x in xs]
    else:
        m, n = cfg.dims
        instances = []
        for _ in range(cfg.samples):
            mat = random_matrix(rng, m, n)
            instances.append((mat, float(log_uniform(rng, *inequality.X_RANGE))))

    def work(item):
        idx, (mat, x) = item
        lhs, rhs = inequality.inequality_sides(mat, x, cfg.constant)
        margin = lhs - rhs
        ok = margin >= -1e-12 * rhs
        row = [idx, mat.digest(), mat.m, mat.n, x, lhs, rhs, margin,
               inequality.sharpness_ratio(mat, x), "ok" if ok else "violation"]
        return row, None if ok else _replay(cfg, matrix=mat.to_list(), xs=[x])

    margins = []
    for row, bad in _map(work, enumerate(instances)):
        rep.rows.append(row)
        margins.append(row[7])
        if bad:
            rep.violations.append(bad)
    rep.summary = {"samples": len(instances), "constant": cfg.constant,
                   "min_margin": min(margins), "violations": len(rep.violations)}
    return rep


def _cm_check(cfg: RunConfig, rng) -> Report:
    mats = _matrices(cfg, rng)
    grid = cfg.t_grid
    K = cfg.order

    def work(item):
        idx, mat = item
        rc = ratio.RatioConfig(mat, cfg.rho)
        d2 = cm_harness.check_cm(lambda t, k: ratio.dklog_f(rc, t, k + 2), K, grid, cfg.tol)
        entry = {"sample": idx, "config_hash": rc.digest(), "matrix": mat.to_list(),
                 "rho": rc.rho, "cm_d2log_f": d2.to_dict()}
        checks = [d2]
        if rc.rho == 2.0:
            bern = cm_harness.check_bernstein(
                lambda t, k: ratio.dklog_f(rc, t, k + 1), K, grid, cfg.tol)
            entry["bernstein_dlog_f"] = bern.to_dict()
            checks.append(bern)
        lc = cm_harness.check_log_convex(lambda t: ratio.log_f(rc, t), grid, 1e-12)
        entry["log_convex"] = lc.to_dict()
        checks.append(lc)
        failed = any(c.verdict == "fail" for c in checks)
        if not rc.within_hypotheses:
            entry["status"] = OUTSIDE
            return entry, None
        entry["status"] = "violation" if failed else "ok"
        return entry, _replay(cfg, matrix=mat.to_list()) if failed else None

    rep = Report(["sample", "config_hash", "rho", "check", "order", "min_slack", "worst_t",
                  "verdict"])
    results = []
    for entry, bad in _map(work, enumerate(mats)):
        results.append(entry)
        if bad:
            rep.violations.append(bad)
        for key in ("cm_d2log_f", "bernstein_dlog_f"):
            if key in entry:
                r = entry[key]
                for k, s, t in zip(r["orders"], r["min_slack_per_order"], r["worst_t_per_order"]):
                    verdict = "fail" if k in r["failed_orders"] else "pass"
                    rep.rows.append([entry["sample"], entry["config_hash"], entry["rho"], key,
                                     k, s, t, verdict])
        lc = entry["log_convex"]
        rep.rows.append([entry["sample"], entry["config_hash"], entry["rho"], "log_convex", "",
                         lc["worst_slack"], lc["worst_pair"][0], lc["verdict"]])
    rep.structured = results
    rep.summary = {"configs": len(mats), "order": K, "within_hypotheses": cfg.rho <= 2.0,
                   "violations": len(rep.violations)}
    return rep


def _sharpness(cfg: RunConfig, rng) -> Report:
    m, n = cfg.dims
    res = inequality.sharpness_search(m, n, cfg.samples, cfg.seed)
    rep = Report(["best_ratio", "x_star", "evaluations", "search_seed", "config"])
    rep.structured = res.to_dict()
    rep.rows.append([res.best_ratio, res.x_star, res.evaluations, res.search_seed,
                     json.dumps(res.config.to_list())])
    rep.summary = {"dims": [m, n], "samples": cfg.samples}
    if res.best_ratio < 2.0 - 1e-9:
        rep.violations.append(_replay(cfg, matrix=res.config.to_list(), xs=[res.x_star],
                                      command="ineq-check", dims=None))
    return rep


def _measure(cfg: RunConfig, rng) -> Report:
    rep = Report(["sample", "config_hash", "rho", "t", "d2log_f", "laplace", "tail_bound",
                  "laplace_error", "dlog_f", "bernstein", "bernstein_error", "status"])
    mats = _matrices(cfg, rng)
    grid = cfg.t_grid

    def work(item):
        idx, mat = item
        rc = ratio.RatioConfig(mat, cfg.rho)
        rows, bad = [], []
        for t in grid:
            t = float(t)
            d2 = ratio.d2log_f(rc, t)
            est = ratio.laplace_density(rc, t)
            err = est.value + est.tail_bound - d2
            ok = abs(err) <= max(1e-8, 1e-6 * abs(d2))
            d1 = bern = berr = math.nan
            if rc.rho == 2.0:
                d1 = ratio.dlog_f(rc, t)
                bern = ratio.bernstein_representation(rc, t)
                berr = bern - d1
                ok = ok and abs(berr) <= max(1e-8, 1e-6 * abs(d1))
            rows.append([idx, rc.digest(), rc.rho, t, d2, est.value, est.tail_bound, err,
                         d1, bern, berr, "ok" if ok else "violation"])
            if not ok:
                bad.append(_replay(cfg, matrix=mat.to_list(), grid=[t, t * 2, 2]))
        prof = ratio.density_profile(rc, points=64)
        profile = {"config_hash": rc.digest(), "u": prof.u_grid.tolist(),
                   "density": prof.values.tolist(), "truncation_u": prof.truncation_u,
                   "tail_bound": prof.tail_bound}
        return rows, bad, profile

    profiles = []
    for rows, bad, prof in _map(work, enumerate(mats)):
        rep.rows.extend(rows)
        rep.violations.extend(bad)
        profiles.append(prof)
    rep.summary = {"configs": len(mats), "bernstein_coefficients": [0.0, 0.0]
                   if cfg.rho == 2.0 else None, "density_profiles": profiles}
    return rep


def _combi_check(cfg: RunConfig, rng) -> Report:
    rep = Report(["sample", "config_hash", "ell", "t", "identity_slack", "f2_bridge_error",
                  "multinomial_slack", "beta_slack", "printed_beta_slack", "status"])
    instances = []
    if cfg.weights is not None:
        w = cfg.weights
        mat = PositiveMatrix.from_rows(cfg.matrix)
        instances.append((mat, combinatorics.WeightVector(w["theta"], w["y"]), float(w["t"])))
    else:
        mats = _matrices(cfg, rng) if cfg.matrix is None else \
            [PositiveMatrix.from_rows(cfg.matrix)] * cfg.samples
        for mat in mats:
            ell = int(rng.integers(2, 4))
            theta = rng.dirichlet(np.ones(ell))
            theta[-1] = 1.0 - math.fsum(theta[:-1])
            y = log_uniform(rng, 0.1, 10.0, size=ell)
            t = float(log_uniform(rng, 0.1, 10.0))
            instances.append((mat, combinatorics.WeightVector(theta, y), t))

    def work(item):
        idx, (mat, w, t) = item
        ident = combinatorics.multinomial_beta_identity_slack(mat.entries[0])
        rc = ratio.RatioConfig(mat, 2.0)
        bridge = abs(math.expm1(combinatorics.log_f2_as_multinomials(mat, t)
                                - ratio.log_f(rc, t)))
        ms = combinatorics.multinomial_inequality_slack(mat, w)
        bs = combinatorics.beta_inequality_slack(mat, w)
        ps = combinatorics.printed_beta_inequality_slack(mat, w)
        ok = ident <= 1e-10 and bridge <= 1e-9 and ms >= -1e-10 and bs >= -1e-10
        row = [idx, mat.digest(), len(w.theta), t, ident, bridge, ms, bs, ps,
               "ok" if ok else "violation"]
        weights = {"theta": list(w.theta), "y": list(w.y), "t": t}
        return row, None if ok else _replay(cfg, matrix=mat.to_list(), weights=weights)

    printed_negative = 0
    for row, bad in _map(work, enumerate(instances)):
        rep.rows.append(row)
        printed_negative += int(row[8] < -1e-10)
        if bad:
            rep.violations.append(bad)
    rep.summary = {"samples": len(instances), "printed_beta_form_negative": printed_negative,
                   "violations": len(rep.violations)}
    return rep


_COMMANDS = {
    "eval": _eval,
    "ineq-check": _ineq_check,
    "cm-check": _cm_check,
    "sharpness": _sharpness,
    "measure": _measure,
    "combi-check": _combi_check,
}


def _render(cfg: RunConfig, rep: Report) -> str:
    if cfg.output_format == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(rep.columns)
        for row in rep.rows:
            writer.writerow([_fmt(v) for v in row])
        return buf.getvalue()
    doc = {"command": cfg.command, "config": asdict(cfg), "summary": rep.summary,
           "violations": rep.violations}
    if rep.structured is not None:
        doc["result"] = rep.structured
    else:
        doc["rows"] = [dict(zip(rep.columns, r)) for r in rep.rows]
    return json.dumps(doc, indent=2, allow_nan=True) + "\n"


def run(cfg: RunConfig) -> int:
    """Execute one configured run, write its report and return the exit status."""
    rng = np.random.default_rng(cfg.seed)
    if cfg.rho > 2.0:
        log.warning("rho=%g > 2: %s, contracts are not asserted", cfg.rho, OUTSIDE)
    rep = _COMMANDS[cfg.command](cfg, rng)
    text = _render(cfg, rep)
    if cfg.output_path:
        Path(cfg.output_path).write_text(text)
    else:
        sys.stdout.write(text)
    if cfg.output_format == "csv":
        summary = {k: v for k, v in rep.summary.items() if k != "density_profiles"}
        print(json.dumps(summary), file=sys.stderr)
    if rep.violations:
        replay = json.dumps(rep.violations[0], indent=2) + "\n"
        if cfg.output_path:
            path = Path(cfg.output_path + ".replay.json")
            path.write_text(replay)
            log.error("%d contract violation(s); first instance written to %s",
                      len(rep.violations), path)
        else:
            log.error("%d contract violation(s); first instance:\n%s", len(rep.violations),
                      replay)
        return EXIT_VIOLATION
    return EXIT_OK


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = build_config(sys.argv[1:] if argv is None else argv)
        return run(cfg)
    except UsageError as exc:
        print(f"gammaratio: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"gammaratio: I/O error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
