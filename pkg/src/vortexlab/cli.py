"""Batch front end: solve runs, admissibility sweeps, plot-ready exports.

Run configurations live in a single JSON file (no environment knobs, so a
run is reproducible from one artifact). Parsing is fail-closed: unknown
keys are a hard error. Exit codes separate the three outcomes the theory
distinguishes: 0 solved, 2 inadmissible (no solution exists for these
sources on this area), 3 solver nonconvergence; 1 is reserved for I/O and
configuration errors.
"""

import argparse
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from .diagnostics import (
    SolveReport,
    curvatures_tw,
    curvatures_vav,
    report_tw,
    report_vav,
)
from .errors import (
    BradlowViolation,
    ConfigurationError,
    Inadmissible,
    SolverError,
    VortexLabError,
)
from .sources import VortexConfiguration
from .surface import TorusGeometry
from .tw import solve_tw, tw_problem
from .vav import solve_vav, vav_problem

_FIELD_COLUMNS = ("x1", "x2", "u", "v", "e_u", "e_v", "Fhat", "Ftilde")
_FMT = "%.11e"  # 12 significant digits


# ---------------------------------------------------------------- config ----


def _check_keys(section, allowed, where):
    if not isinstance(section, dict):
        raise ConfigurationError(f"{where} must be a JSON object")
    unknown = set(section) - set(allowed)
    if unknown:
        raise ConfigurationError(
            f"unknown key(s) {sorted(unknown)} in {where}; allowed: {sorted(allowed)}"
        )


def _require(section, key, where):
    if key not in section:
        raise ConfigurationError(f"missing required key {key!r} in {where}")
    return section[key]


def _parse_sources(raw, L1, L2):
    _check_keys(raw, ("zeros_q", "poles_q", "zeros_p", "poles_p"), "sources")
    lists = {}
    for name in ("zeros_q", "poles_q", "zeros_p", "poles_p"):
        entries = []
        for item in raw.get(name, []):
            if not isinstance(item, (list, tuple)) or len(item) != 3:
                raise ConfigurationError(
                    f"sources.{name}: entries are [x, y, multiplicity], got {item!r}"
                )
            x, y, m = item
            if int(m) != m or m <= 0:
                raise ConfigurationError(
                    f"sources.{name}: multiplicity must be a positive integer, got {m!r}"
                )
            entries.append((float(x) % L1, float(y) % L2, int(m)))
        lists[name] = entries
    return lists


class RunConfig:
    """Validated run configuration (fail-closed JSON parsing)."""

    def __init__(self, data):
        if not isinstance(data, dict):
            raise ConfigurationError("config root must be a JSON object")
        _check_keys(data, ("torus", "sources", "solver", "outputs"), "config")

        torus = _require(data, "torus", "config")
        _check_keys(torus, ("L1", "L2", "n1", "n2"), "torus")
        self.L1 = float(_require(torus, "L1", "torus"))
        self.L2 = float(_require(torus, "L2", "torus"))
        self.n1 = int(_require(torus, "n1", "torus"))
        self.n2 = int(_require(torus, "n2", "torus"))

        self.sources = _parse_sources(data.get("sources", {}), self.L1, self.L2)

        solver = _require(data, "solver", "config")
        _check_keys(
            solver, ("model", "method", "tol", "max_iter", "kappa", "seed"), "solver"
        )
        self.model = _require(solver, "model", "solver")
        if self.model not in ("tw", "vav"):
            raise ConfigurationError(f"solver.model must be 'tw' or 'vav', got {self.model!r}")
        valid_methods = {
            "tw": ("newton", "gradient"),
            "vav": ("newton", "fixed_point"),
        }[self.model]
        self.method = solver.get("method", "newton")
        if self.method not in valid_methods:
            raise ConfigurationError(
                f"solver.method for model {self.model!r} must be one of "
                f"{valid_methods}, got {self.method!r}"
            )
        self.tol = float(solver.get("tol", 1e-8))
        self.max_iter = solver.get("max_iter", None)
        if self.max_iter is not None:
            self.max_iter = int(self.max_iter)
        self.kappa = float(solver.get("kappa", 2.0))
        self.seed = solver.get("seed", None)
        if self.seed is not None:
            self.seed = int(self.seed)
        if self.model == "tw" and (self.sources["poles_q"] or self.sources["poles_p"]):
            raise ConfigurationError("tw model admits zeros only; pole lists must be empty")

        outputs = data.get("outputs", {})
        _check_keys(outputs, ("report", "fields", "format"), "outputs")
        self.format = outputs.get("format", "csv")
        if self.format not in ("csv", "f64bin"):
            raise ConfigurationError(
                f"outputs.format must be 'csv' or 'f64bin', got {self.format!r}"
            )
        default_fields = "fields.csv" if self.format == "csv" else "fields.bin"
        self.report_path = outputs.get("report", "report.json")
        self.fields_path = outputs.get("fields", default_fields)

    def geometry(self):
        return TorusGeometry(self.L1, self.L2, self.n1, self.n2)

    def configuration(self):
        return VortexConfiguration(**self.sources)

    def inputs_echo(self, geometry):
        return {
            "torus": {"L1": self.L1, "L2": self.L2, "n1": self.n1, "n2": self.n2},
            "sources": {k: [list(e) for e in v] for k, v in self.sources.items()},
            "solver": {
                "model": self.model,
                "method": self.method,
                "tol": self.tol,
                "max_iter": self.max_iter,
                "kappa": self.kappa,
                "seed": self.seed,
            },
            "sigma": self.kappa * max(geometry.h1, geometry.h2),
        }


def _load_config(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path}: invalid JSON ({exc})") from exc
    return RunConfig(data)


# --------------------------------------------------------------- reports ----


def _write_report(report: SolveReport, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _inadmissible_report(model, inputs, detail, wall_seconds):
    return SolveReport(
        model=model,
        status="inadmissible",
        inputs=inputs,
        admissibility=detail,
        solver_trace={"iterations": 0, "converged": False},
        timings={"wall_seconds": wall_seconds},
    )


def _nonconverged_report(model, inputs, admissibility, exc, wall_seconds):
    return SolveReport(
        model=model,
        status="nonconverged",
        inputs=inputs,
        admissibility=admissibility,
        solver_trace={
            "converged": False,
            "error": type(exc).__name__,
            "message": str(exc),
            "history": exc.trace,
        },
        timings={"wall_seconds": wall_seconds},
    )


def _tw_admissibility_detail(config, geom):
    N1, _, N2, _ = config.counts()
    a1 = geom.area - 2.0 * math.pi * (N1 + N2)
    a2 = geom.area - 2.0 * math.pi * (N1 + 2 * N2)
    return {
        "satisfied": False,
        "violated": "Bradlow bound",
        "margin": a2,
        "a1": a1,
        "a2": a2,
    }


def _vav_admissibility_detail(config, geom):
    N1, P1, N2, P2 = config.counts()
    a = -math.pi * (N1 - P1 + N2 - P2) / geom.area
    b = -math.pi * (N1 - P1 + 2 * (N2 - P2)) / geom.area
    violated = []
    if abs(a) >= 1.0:
        violated.append("difference bound (total)")
    if abs(b) >= 1.0:
        violated.append("difference bound (weighted)")
    return {
        "satisfied": False,
        "violated": violated,
        "a": a,
        "b": b,
        "margin_a": 1.0 - abs(a),
        "margin_b": 1.0 - abs(b),
    }


# ----------------------------------------------------------- field dumps ----


def _field_planes(geom, sol, model):
    x1, x2 = geom.nodes()
    u = sol.u.values
    v = sol.v.values
    if model == "tw":
        fhat, ftilde = curvatures_tw(sol)
    else:
        fhat, ftilde = curvatures_vav(sol)
    return np.stack(
        [x1, x2, u, v, np.exp(u), np.exp(v), fhat.values, ftilde.values]
    )


def _write_fields(path, planes, fmt):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    n1, n2 = planes.shape[1], planes.shape[2]
    if fmt == "csv":
        flat = planes.reshape(len(_FIELD_COLUMNS), n1 * n2).T
        np.savetxt(
            path,
            flat,
            fmt=_FMT,
            delimiter=",",
            header=",".join(_FIELD_COLUMNS),
            comments="",
        )
    else:
        with open(path, "wb") as fh:
            fh.write(planes.astype("<f8").tobytes(order="C"))
        sidecar = {
            "n1": n1,
            "n2": n2,
            "columns": list(_FIELD_COLUMNS),
            "dtype": "<f8",
            "order": "C",
        }
        with open(str(path) + ".json", "w", encoding="utf-8") as fh:
            json.dump(sidecar, fh, indent=2, sort_keys=True)
            fh.write("\n")


def _read_fields(path):
    path = Path(path)
    if not path.exists():
        raise ConfigurationError(f"field dump {path} does not exist")
    if path.suffix == ".csv":
        with open(path, "r", encoding="utf-8") as fh:
            header = fh.readline().strip()
        if header.split(",") != list(_FIELD_COLUMNS):
            raise ConfigurationError(f"{path}: unexpected field-dump header {header!r}")
        flat = np.loadtxt(path, delimiter=",", skiprows=1)
        if flat.ndim != 2 or flat.shape[1] != len(_FIELD_COLUMNS):
            raise ConfigurationError(f"{path}: corrupt field dump")
        n1 = len(np.unique(flat[:, 0]))
        n2 = len(np.unique(flat[:, 1]))
        if n1 * n2 != flat.shape[0]:
            raise ConfigurationError(f"{path}: row count does not form a grid")
        return flat.T.reshape(len(_FIELD_COLUMNS), n1, n2)
    sidecar_path = Path(str(path) + ".json")
    if not sidecar_path.exists():
        raise ConfigurationError(f"missing sidecar {sidecar_path}")
    with open(sidecar_path, "r", encoding="utf-8") as fh:
        sidecar = json.load(fh)
    n1, n2 = int(sidecar["n1"]), int(sidecar["n2"])
    raw = np.fromfile(path, dtype=sidecar.get("dtype", "<f8"))
    expected = len(_FIELD_COLUMNS) * n1 * n2
    if raw.size != expected:
        raise ConfigurationError(
            f"{path}: expected {expected} values, found {raw.size}"
        )
    return raw.reshape(len(_FIELD_COLUMNS), n1, n2)


# -------------------------------------------------------------- commands ----


def _solve_once(cfg: RunConfig, geom, config):
    """Admissibility check plus one solve; returns (status, report_or_parts)."""
    t0 = time.perf_counter()
    inputs = cfg.inputs_echo(geom)
    if cfg.model == "tw":
        try:
            problem = tw_problem(geom, config, kappa=cfg.kappa)
        except BradlowViolation:
            detail = _tw_admissibility_detail(config, geom)
            return 2, _inadmissible_report("tw", inputs, detail, time.perf_counter() - t0), None, None
        kwargs = {"tol": cfg.tol, "method": cfg.method}
        if cfg.max_iter is not None:
            kwargs["max_iter"] = cfg.max_iter
        if cfg.seed is not None:
            rng = np.random.default_rng(cfg.seed)
            kwargs["x0"] = (
                rng.standard_normal((geom.n1, geom.n2)),
                rng.standard_normal((geom.n1, geom.n2)),
            )
        try:
            sol = solve_tw(problem, **kwargs)
        except SolverError as exc:
            adm = {"satisfied": True, "a1": problem.a1, "a2": problem.a2}
            return 3, _nonconverged_report("tw", inputs, adm, exc, time.perf_counter() - t0), None, None
        return 0, report_tw(sol, problem, inputs, time.perf_counter() - t0), sol, problem
    try:
        problem = vav_problem(geom, config, kappa=cfg.kappa)
    except Inadmissible:
        detail = _vav_admissibility_detail(config, geom)
        return 2, _inadmissible_report("vav", inputs, detail, time.perf_counter() - t0), None, None
    kwargs = {"tol": cfg.tol, "method": cfg.method}
    if cfg.max_iter is not None:
        kwargs["max_iter"] = cfg.max_iter
    if cfg.seed is not None:
        rng = np.random.default_rng(cfg.seed)
        kwargs["x0"] = (
            rng.standard_normal((geom.n1, geom.n2)),
            rng.standard_normal((geom.n1, geom.n2)),
        )
    try:
        sol = solve_vav(problem, **kwargs)
    except SolverError as exc:
        adm = {
            "satisfied": True,
            "a": problem.a,
            "b": problem.b,
            "margin_a": 1.0 - abs(problem.a),
            "margin_b": 1.0 - abs(problem.b),
        }
        return 3, _nonconverged_report("vav", inputs, adm, exc, time.perf_counter() - t0), None, None
    return 0, report_vav(sol, problem, inputs, time.perf_counter() - t0), sol, problem


def cmd_solve(config_path, out_dir):
    cfg = _load_config(config_path)
    geom = cfg.geometry()
    config = cfg.configuration()
    out = Path(out_dir)
    status, report, sol, _ = _solve_once(cfg, geom, config)
    _write_report(report, out / cfg.report_path)
    if status == 0:
        planes = _field_planes(geom, sol, cfg.model)
        _write_fields(out / cfg.fields_path, planes, cfg.format)
    return status


def cmd_sweep(config_path, lengths, out_dir):
    cfg = _load_config(config_path)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for L in lengths:
        geom = TorusGeometry(L, L, cfg.n1, cfg.n2)
        # keep fractional source coordinates fixed while the torus scales
        scaled = {
            name: [(x * L / cfg.L1, y * L / cfg.L2, m) for x, y, m in entries]
            for name, entries in cfg.sources.items()
        }
        config = VortexConfiguration(**scaled)
        area = geom.area
        if cfg.model == "tw":
            detail = _tw_admissibility_detail(config, geom)
            margins = (detail["a1"], detail["a2"])
            admissible = detail["a2"] > 0.0
        else:
            detail = _vav_admissibility_detail(config, geom)
            margins = (detail["margin_a"], detail["margin_b"])
            admissible = detail["margin_a"] > 0.0 and detail["margin_b"] > 0.0
        if not admissible:
            rows.append((area, 0, margins[0], margins[1], "", "", "", "", ""))
            continue
        status, report, sol, _ = _solve_once(cfg, geom, config)
        if status != 0:
            rows.append((area, 1, margins[0], margins[1], "", "", "", "", ""))
            continue
        sup_eu = float(np.exp(sol.u.values).max())
        sup_ev = float(np.exp(sol.v.values).max())
        qi = report.quantized_integrals
        rows.append(
            (
                area,
                1,
                margins[0],
                margins[1],
                sup_eu,
                sup_ev,
                qi["Iu"]["rel_error"],
                qi["Iv"]["rel_error"],
                report.solver_trace["iterations"],
            )
        )
    csv_path = out / "sweep.csv"
    with open(csv_path, "w", encoding="utf-8") as fh:
        fh.write("S,admissible,margin1,margin2,sup_eu,sup_ev,qerr_u,qerr_v,iterations\n")
        for row in rows:
            fh.write(
                ",".join("" if v == "" else f"{v:.12g}" if isinstance(v, float) else str(v) for v in row)
                + "\n"
            )
    return 0


def cmd_plotdata(fields_path, out_path):
    planes = _read_fields(fields_path)
    n1, n2 = planes.shape[1], planes.shape[2]
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    with open(out_path, "w", encoding="utf-8") as fh:
        for i in range(n1):
            for j in range(n2):
                fh.write(" ".join(_FMT % planes[c, i, j] for c in range(len(_FIELD_COLUMNS))))
                fh.write("\n")
            fh.write("\n")
    return 0


# ------------------------------------------------------------------ main ----


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="vortexlab",
        description="Multiple-vortex and vortex/anti-vortex solves on a flat torus.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="run one solve from a JSON config")
    p_solve.add_argument("--config", required=True, help="path to run config JSON")
    p_solve.add_argument("--out", default=".", help="output directory")

    p_sweep = sub.add_parser("sweep", help="rerun a config over a list of torus sizes")
    p_sweep.add_argument("--config", required=True, help="path to base config JSON")
    p_sweep.add_argument(
        "--lengths", required=True, help="comma-separated side lengths L (L1=L2=L)"
    )
    p_sweep.add_argument("--out", default=".", help="output directory")

    p_plot = sub.add_parser("plotdata", help="convert a field dump to gnuplot text")
    p_plot.add_argument("--fields", required=True, help="path to a field dump")
    p_plot.add_argument("--out", required=True, help="output text path")
    return parser


def main(argv=None):
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "solve":
            return cmd_solve(args.config, args.out)
        if args.command == "sweep":
            lengths = [float(s) for s in args.lengths.split(",") if s.strip()]
            if not lengths:
                raise ConfigurationError("--lengths list is empty")
            return cmd_sweep(args.config, lengths, args.out)
        if args.command == "plotdata":
            return cmd_plotdata(args.fields, args.out)
        raise ConfigurationError(f"unknown command {args.command!r}")
    except (ConfigurationError, OSError, ValueError) as exc:
        print(f"vortexlab: error: {exc}", file=sys.stderr)
        return 1
    except VortexLabError as exc:
        print(f"vortexlab: error: {exc}", file=sys.stderr)
        return 1


def entry():
    sys.exit(main())


if __name__ == "__main__":
    entry()
