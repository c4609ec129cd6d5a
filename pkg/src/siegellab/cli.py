"""Command-line harness.

Every subcommand reads its options from flags and, optionally, a flat
``key = value`` config file (flags win). CSV outputs start with a
``# config:`` comment echoing the resolved configuration and contain no
timing, so a replay with the same config, seed and workers is
byte-identical. JSON outputs wrap the payload in an experiment record.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import subprocess
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

from . import __version__
from .errors import ResourceGuardError, ValidationError
from .rng import resolve_workers

EXIT_OK, EXIT_FAIL, EXIT_VALIDATION, EXIT_GUARD = 0, 1, 2, 3


# --- option parsing helpers ----------------------------------------------------


def _count(text: str) -> int:
    """Positive integer, accepting forms like ``1e5``."""
    try:
        val = float(text)
    except ValueError as exc:
        raise ValidationError(f"not a number: {text!r}") from exc
    if not val.is_integer() or val < 1:
        raise ValidationError(f"expected a positive integer, got {text!r}")
    return int(val)


def _seed(text: str) -> int:
    try:
        val = int(str(text), 0)
    except ValueError as exc:
        raise ValidationError(f"seed must be an integer, got {text!r}") from exc
    if not 0 <= val < 2**64:
        raise ValidationError("seed must fit in 64 unsigned bits")
    return val


def _bool(text: str) -> bool:
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValidationError(f"expected a boolean, got {text!r}")


def _positive_float(text: str) -> float:
    try:
        val = float(text)
    except ValueError as exc:
        raise ValidationError(f"not a number: {text!r}") from exc
    if not val > 0 or not math.isfinite(val):
        raise ValidationError(f"expected a positive number, got {text!r}")
    return val


@dataclass(frozen=True)
class Option:
    type: Callable[[str], Any]
    default: Any
    help: str
    flag: bool = False


COMMON = {
    "seed": Option(_seed, None, "64-bit seed (required for stochastic commands)"),
    "workers": Option(_count, 1, "worker processes (SIEGELLAB_WORKERS overrides)"),
    "json": Option(_bool, False, "emit a JSON experiment record", flag=True),
    "csv": Option(str, None, "write CSV to this path ('-' for stdout)"),
}

COMMANDS: dict[str, dict[str, Option]] = {
    "integrability": {
        "type": Option(str, None, "Cartan type A-G"),
        "rank": Option(_count, None, "rank"),
        "alpha": Option(_count, None, "distinguished simple root (1-based)"),
        "full": Option(_bool, False, "run the full Weyl-group scan", flag=True),
        "weyl_cap": Option(_count, 10**6, "refuse Weyl groups larger than this"),
    },
    "cusp": {
        "delta": Option(str, "0.1,0.2,0.3,0.5", "comma-separated thresholds"),
        "samples": Option(_count, 10**6, "Haar samples"),
    },
    "meanvalue": {
        "f": Option(str, "annulus:1,2", "test function, e.g. annulus:1,2 or ball:1"),
        "samples": Option(_count, 10**5, "Haar samples"),
    },
    "enumerate": {
        "model": Option(str, "1,2", "Grassmannian 'ell,n'"),
        "max_height": Option(_positive_float, None, "strict upper bound on the height"),
        "format": Option(str, "csv", "csv or json"),
    },
    "regions": {
        "selftest": Option(_bool, False, "run the sandwich and cell-partition suites", flag=True),
        "samples": Option(_count, 10**4, "random cone vectors per check"),
    },
    "count": {
        "model": Option(str, "1,2", "Grassmannian 'ell,n'"),
        "c": Option(_positive_float, 1.0, "approximation constant"),
        "tau": Option(str, "beta", "exponent, or 'beta'"),
        "t_grid": Option(str, "e4:e12:9", "T grid, e.g. e4:e12:9"),
        "ensemble": Option(_count, 200, "number of uniform random points"),
        "method": Option(str, "shell", "shell or enumerate"),
    },
    "equidist": {
        "phi": Option(str, "cusp:0.5", "observable: cusp:s, ball:r or constant"),
        "y_grid": Option(str, "4:4096:geom6", "y grid, e.g. 4:4096:geom6"),
        "bases": Option(_count, 10, "number of base lattices"),
        "tol": Option(_positive_float, 1e-6, "quadrature refinement tolerance"),
    },
    "selftest": {
        "quick": Option(_bool, False, "reduced sample counts, loosened tolerances", flag=True),
    },
}

STOCHASTIC = {"cusp", "meanvalue", "count", "equidist"}
REGIONS_SEED = 5


@dataclass
class ExperimentConfig:
    command: str
    params: dict[str, Any]
    seed: int | None = None
    workers: int = 1
    output: dict[str, Any] = field(default_factory=dict)

    def echo(self) -> dict[str, Any]:
        return {"command": self.command, "params": self.params, "seed": self.seed,
                "workers": self.workers, "output": self.output}


@dataclass
class ExperimentRecord:
    config: dict[str, Any]
    version: str
    wall_time: float
    payload: Any
    csv_rows: list[list[Any]] | None = None
    csv_header: list[str] | None = None
    text: str | None = None
    exit_code: int = EXIT_OK

    def as_json(self) -> str:
        return json.dumps({"config": self.config, "version": self.version,
                           "wall_time": self.wall_time, "payload": self.payload}, indent=2, default=_jsonable)


def _jsonable(obj):
    if hasattr(obj, "tolist"):
        return obj.tolist()
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def artifact_version() -> str:
    """Package version, with the git commit appended when available."""
    try:
        out = subprocess.run(["git", "rev-parse", "--short", "HEAD"], cwd=Path(__file__).parent,
                             capture_output=True, text=True, timeout=5)
        if out.returncode == 0 and out.stdout.strip():
            return f"{__version__}+g{out.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        pass
    return __version__


# --- config resolution -----------------------------------------------------------


def read_config_file(path: str) -> dict[str, str]:
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ValidationError(f"cannot read config file {path}: {exc}") from exc
    out = {}
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep or not key.strip():
            raise ValidationError(f"{path}:{no}: expected 'key = value'")
        out[key.strip().replace("-", "_")] = value.strip()
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="siegellab", description="Siegel transforms, lattice counting and "
                                     "Diophantine approximation on flag varieties.")
    parser.add_argument("--version", action="version", version=f"siegellab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, opts in COMMANDS.items():
        p = sub.add_parser(name)
        if name == "count":
            p.add_argument("action", nargs="?", choices=["run", "fit"], default="run")
            p.add_argument("input", nargs="?", help="CSV produced by 'count' (for 'count fit')")
        p.add_argument("--config", help="flat key = value config file")
        for key, opt in {**opts, **COMMON}.items():
            flag = "--" + key.replace("_", "-")
            if opt.flag:
                p.add_argument(flag, dest=key, action="store_const", const=True, default=None, help=opt.help)
            elif key == "csv":
                p.add_argument(flag, dest=key, nargs="?", const="-", default=None, help=opt.help)
            else:
                p.add_argument(flag, dest=key, default=None, help=opt.help)
    return parser


def resolve_config(ns: argparse.Namespace) -> ExperimentConfig:
    opts = {**COMMANDS[ns.command], **COMMON}
    file_values = read_config_file(ns.config) if getattr(ns, "config", None) else {}
    unknown = sorted(set(file_values) - set(opts))
    if unknown:
        raise ValidationError(f"unknown config keys: {', '.join(unknown)}")
    values = {}
    for key, opt in opts.items():
        raw = getattr(ns, key, None)
        if raw is True and opt.flag:
            values[key] = True
        elif raw is not None:
            values[key] = opt.type(raw)
        elif key in file_values:
            values[key] = opt.type(file_values[key])
        else:
            values[key] = opt.default
    if ns.command == "count":
        values["action"] = ns.action
        values["input"] = ns.input
    seed = values.pop("seed")
    workers = resolve_workers(values.pop("workers"))
    output = {"json": values.pop("json"), "csv": values.pop("csv")}
    needs_seed = ns.command in STOCHASTIC and not (ns.command == "count" and values.get("action") == "fit")
    if needs_seed and seed is None:
        raise ValidationError(f"'{ns.command}' is stochastic: --seed is required")
    return ExperimentConfig(ns.command, values, seed, workers, output)


# --- subcommands -------------------------------------------------------------------


def _integrability(cfg: ExperimentConfig) -> dict:
    from .rootsys import (
        is_l1_integrable,
        is_linf_integrable,
        l2_necessary_full_test,
        l2_necessary_neighbor_test,
        parabolic,
    )

    p = cfg.params
    for key in ("type", "rank", "alpha"):
        if p[key] is None:
            raise ValidationError(f"--{key} is required")
    choice = parabolic(p["type"], p["rank"], p["alpha"])
    payload = {"type": p["type"].upper(), "rank": p["rank"], "alpha": p["alpha"],
               "l1": is_l1_integrable(choice), "linf": is_linf_integrable(choice),
               "l2_neighbor": l2_necessary_neighbor_test(choice), "l2_full": None, "witness": None}
    if p["full"]:
        verdict = l2_necessary_full_test(choice, p["weyl_cap"])
        payload["l2_full"] = verdict.holds
        payload["witness"] = None if verdict.witness is None else list(verdict.witness.word)
    return payload


def _integrability_text(payload: dict) -> str:
    cols = ["type", "rank", "alpha", "L1", "Linf", "L2-neighbor", "L2-full", "witness"]
    witness = "-" if payload["witness"] is None else "s" + ".s".join(map(str, payload["witness"])) \
        if payload["witness"] else "e"
    vals = [payload["type"], payload["rank"], payload["alpha"], payload["l1"], payload["linf"],
            payload["l2_neighbor"], "-" if payload["l2_full"] is None else payload["l2_full"], witness]
    return "  ".join(cols) + "\n" + "  ".join(str(v) for v in vals)


def _cusp(cfg: ExperimentConfig) -> tuple[dict, list[str], list[list]]:
    from .siegel import cusp_probabilities, predicted_cusp_probability

    try:
        deltas = [float(t) for t in cfg.params["delta"].split(",")]
    except ValueError as exc:
        raise ValidationError(f"bad delta list {cfg.params['delta']!r}") from exc
    if any(not 0 < d <= 1 for d in deltas):
        raise ValidationError("each delta must lie in (0, 1]")
    emp = cusp_probabilities(deltas, cfg.params["samples"], cfg.seed, cfg.workers)
    rows = []
    for d in deltas:
        pred = predicted_cusp_probability(d)
        rows.append([d, emp[d], pred, emp[d] / pred - 1.0])
    payload = [dict(zip(("delta", "empirical", "predicted", "rel_err"), r)) for r in rows]
    return payload, ["delta", "empirical", "predicted", "rel_err"], rows


def _meanvalue(cfg: ExperimentConfig) -> dict:
    from .siegel import mean_value_mc, parse_test_function

    res = mean_value_mc(parse_test_function(cfg.params["f"]), cfg.params["samples"], cfg.seed, cfg.workers)
    return {"estimate": res.estimate, "stderr": res.stderr, "predicted": res.predicted, "z_score": res.z_score}


def _enumerate(cfg: ExperimentConfig) -> tuple[list, list[str], list[list]]:
    from .flag import enumerate_rational_points, parse_model

    if cfg.params["max_height"] is None:
        raise ValidationError("--max-height is required")
    if cfg.params["format"] not in ("csv", "json"):
        raise ValidationError("--format must be csv or json")
    subs = enumerate_rational_points(parse_model(cfg.params["model"]), cfg.params["max_height"])
    rows = [[json.dumps([list(r) for r in s.basis], separators=(",", ":")),
             json.dumps(list(s.plucker), separators=(",", ":")), repr(s.height)] for s in subs]
    payload = [{"hnf_rows": [list(r) for r in s.basis], "plucker": list(s.plucker), "height": s.height}
               for s in subs]
    return payload, ["hnf_rows", "plucker", "height"], rows


def _regions(cfg: ExperimentConfig) -> dict:
    from .flag import cell_partition_check, parse_model, sandwich_violations
    from .rng import generator

    if not cfg.params["selftest"]:
        raise ValidationError("regions: nothing to do (pass --selftest)")
    seed = REGIONS_SEED if cfg.seed is None else cfg.seed
    m = cfg.params["samples"]
    checks = []
    for text in ("1,2", "1,3", "2,4"):
        model = parse_model(text)
        for ell in (8, 16, 32):
            rep = sandwich_violations(model, ell, m, generator(seed, f"regions-sandwich-{text}", ell))
            checks.append({"check": "sandwich", "model": text, "ell": ell, "samples": m,
                           "violations": rep.violations, "passed": rep.violations == 0})
    for text in ("1,2", "1,3"):
        rep = cell_partition_check(parse_model(text), 8, m, generator(seed, f"regions-cells-{text}"))
        bad = rep.samples - min(rep.exactly_one, rep.index_agrees)
        checks.append({"check": "cell-partition", "model": text, "ell": None, "samples": rep.samples,
                       "violations": bad, "passed": bad == 0})
    return {"checks": checks, "passed": all(c["passed"] for c in checks)}


def _resolve_tau(text: str, model) -> float:
    if text == "beta":
        return model.beta_f
    try:
        return float(text)
    except ValueError as exc:
        raise ValidationError(f"bad tau {text!r}") from exc


def _count_run(cfg: ExperimentConfig) -> tuple[dict, list[str], list[list]]:
    from .count import ensemble_counts, kappa_oracle, parse_T_grid, slope_fit
    from .flag import parse_model

    p = cfg.params
    if p["method"] not in ("shell", "enumerate"):
        raise ValidationError("--method must be shell or enumerate")
    model = parse_model(p["model"])
    tau = _resolve_tau(p["tau"], model)
    grid = parse_T_grid(p["t_grid"])
    if p["method"] == "enumerate":
        from .count import counts_on_grid, ensemble_member
        import numpy as np

        counts = np.array([counts_on_grid(model, ensemble_member(model, cfg.seed, m), p["c"], tau, grid, "enumerate")
                           for m in range(p["ensemble"])])
    else:
        counts = ensemble_counts(model, p["c"], tau, grid, p["ensemble"], cfg.seed, cfg.workers)
    lnT = [math.log(t) for t in grid]
    rows = [[m, repr(lnT[j]), int(counts[m, j])] for m in range(counts.shape[0]) for j in range(len(grid))]
    fit = slope_fit(lnT, counts.mean(axis=0))
    payload = {"fit": _fit_payload(fit), "per_member_slope_sd": None}
    if counts.shape[0] > 1:
        import numpy as np

        slopes = [slope_fit(lnT, counts[m]).slope for m in range(counts.shape[0])]
        payload["per_member_slope_sd"] = float(np.std(slopes, ddof=1))
    try:
        kappa = kappa_oracle(model, p["c"])
        payload["kappa_oracle"] = {"value": kappa.value, "normalization": kappa.normalization,
                                   "method": kappa.method}
    except ValidationError:
        payload["kappa_oracle"] = None
    return payload, ["member", "lnT", "N"], rows


def _fit_payload(fit) -> dict:
    return {"points": fit.points, "slope": fit.slope, "intercept": fit.intercept, "r2": fit.r2,
            "stderr": fit.stderr}


def read_count_csv(path: str) -> dict[float, list[int]]:
    """``member,lnT,N`` rows grouped by lnT."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc}") from exc
    lines = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
    reader = csv.DictReader(lines)
    if reader.fieldnames is None or not {"member", "lnT", "N"} <= set(reader.fieldnames):
        raise ValidationError(f"{path}: expected columns member,lnT,N")
    groups: dict[float, list[int]] = {}
    try:
        for row in reader:
            groups.setdefault(float(row["lnT"]), []).append(int(row["N"]))
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"{path}: malformed row") from exc
    return groups


def _count_fit(cfg: ExperimentConfig) -> dict:
    from .count import slope_fit

    if not cfg.params["input"]:
        raise ValidationError("count fit needs the CSV path")
    groups = read_count_csv(cfg.params["input"])
    lnT = sorted(groups)
    means = [math.fsum(groups[t]) / len(groups[t]) for t in lnT]
    return _fit_payload(slope_fit(lnT, means))


def _equidist(cfg: ExperimentConfig) -> tuple[dict, list[str], list[list]]:
    from .equidist import decay_probe, parse_observable, parse_y_grid, sample_compact_bases

    p = cfg.params
    phi = parse_observable(p["phi"])
    ys = parse_y_grid(p["y_grid"])
    bases = sample_compact_bases(cfg.seed, p["bases"])
    curve = decay_probe(phi, bases, ys, tol=p["tol"])
    header = ["y", "max_error", "median_error"] + [f"base_{i}" for i in range(len(bases))]
    rows = [[repr(y), repr(e), repr(m)] + [repr(float(v)) for v in curve.per_base[:, j]]
            for j, (y, e, m) in enumerate(zip(curve.ys, curve.errors, curve.median_errors))]
    payload = {"ys": curve.ys, "errors": curve.errors, "median_errors": curve.median_errors,
               "fitted_exponent": curve.fitted_exponent, "target": curve.target}
    return payload, header, rows


def _selftest(cfg: ExperimentConfig, echo: Callable[[str], None]) -> dict:
    from .acceptance import run_suite

    results = run_suite(quick=cfg.params["quick"], echo=echo)
    return {"criteria": [{"number": r.number, "name": r.name, "passed": r.passed, "detail": r.detail,
                          "seconds": r.seconds} for r in results],
            "passed": all(r.passed for r in results)}


def run(cfg: ExperimentConfig, echo: Callable[[str], None] | None = None) -> ExperimentRecord:
    """Dispatch a resolved configuration to the module operations."""
    t0 = time.perf_counter()
    header = rows = None
    text = None
    code = EXIT_OK
    cmd = cfg.command
    if cmd == "integrability":
        payload = _integrability(cfg)
        text = _integrability_text(payload)
    elif cmd == "cusp":
        payload, header, rows = _cusp(cfg)
    elif cmd == "meanvalue":
        payload = _meanvalue(cfg)
        text = (f"estimate {payload['estimate']:.6f}  stderr {payload['stderr']:.6f}  "
                f"predicted {payload['predicted']:.6f}  z {payload['z_score']:+.3f}")
    elif cmd == "enumerate":
        payload, header, rows = _enumerate(cfg)
    elif cmd == "regions":
        payload = _regions(cfg)
        text = "\n".join(f"{c['check']:15s} ({c['model']}) ell={c['ell']}: {c['violations']} violations / "
                         f"{c['samples']}" for c in payload["checks"])
        code = EXIT_OK if payload["passed"] else EXIT_FAIL
    elif cmd == "count":
        if cfg.params["action"] == "fit":
            payload = _count_fit(cfg)
            text = json.dumps(payload, indent=2)
        else:
            payload, header, rows = _count_run(cfg)
    elif cmd == "equidist":
        payload, header, rows = _equidist(cfg)
    elif cmd == "selftest":
        payload = _selftest(cfg, echo or (lambda s: None))
        code = EXIT_OK if payload["passed"] else EXIT_FAIL
    else:
        raise ValidationError(f"unknown command {cmd!r}")
    return ExperimentRecord(cfg.echo(), artifact_version(), time.perf_counter() - t0, payload,
                            rows, header, text, code)


def render_csv(record: ExperimentRecord, delimiter: str = ",") -> str:
    buf = io.StringIO()
    buf.write("# config: " + json.dumps(record.config, sort_keys=True, separators=(",", ":")) + "\n")
    w = csv.writer(buf, delimiter=delimiter, lineterminator="\n")
    w.writerow(record.csv_header)
    w.writerows(record.csv_rows)
    return buf.getvalue()


def _emit(record: ExperimentRecord, cfg: ExperimentConfig, out) -> None:
    delimiter = ";" if cfg.command == "enumerate" else ","
    as_json = cfg.output["json"] or (cfg.command == "enumerate" and cfg.params["format"] == "json")
    wants_csv = record.csv_rows is not None and (cfg.output["csv"] is not None or not as_json)
    if wants_csv:
        text = render_csv(record, delimiter)
        target = cfg.output["csv"]
        if target in (None, "-"):
            out.write(text)
        else:
            Path(target).write_text(text, encoding="utf-8")
    if as_json:
        out.write(record.as_json() + "\n")
    elif not wants_csv and record.text is not None:
        out.write(record.text + "\n")


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = sys.argv[1:] if argv is None else argv
    try:
        ns = parser.parse_args(args)
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else EXIT_VALIDATION
    try:
        cfg = resolve_config(ns)
        echo = (lambda line: print(line, flush=True)) if cfg.command == "selftest" else None
        record = run(cfg, echo)
        _emit(record, cfg, sys.stdout)
        if cfg.command == "equidist" and not cfg.output["json"]:
            print(f"fitted exponent {record.payload['fitted_exponent']:.4f}", file=sys.stderr)
        return record.exit_code
    except ResourceGuardError as exc:
        print(f"siegellab: refused: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except ValidationError as exc:
        print(f"siegellab: error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
