"""Command-line front end.

Every run is described by a JSON-serialisable configuration::

    {"command": "sweep", "model": "full", "angular": false,
     "parameters": {"eta": 0.25, ...}, "payload": {"variable": "n_m", ...},
     "precision": 12, "log_base": 2}

``--config`` loads such a file and ``--set key=value`` overrides single
entries (values are parsed as JSON when possible). Parameter keys go to
``parameters``; ``model``, ``angular``, ``precision`` and ``log_base`` are
top-level; anything else belongs to the command payload.

With ``angular: false`` (the default) the rates ``omega_m``, ``gamma``,
``kappa``, ``delta0`` and ``omega_c`` are read in Hz and multiplied by 2pi.
``g0`` and ``drive_e`` are always taken in rad/s.

Results go to CSV; with ``-o`` a ``.meta.json`` sidecar holding the fully
resolved configuration is written next to it. Feeding that sidecar back
through ``--config`` reproduces the CSV byte for byte.

Exit codes: 0 success, 1 invalid input, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (
    DEFAULT_METRICS,
    FIGURES,
    SweepResult,
    check_metrics,
    compute_metrics,
    figure_dataset,
    find_threshold,
    model_kind,
    steady_state,
    sweep,
    threshold_curve,
    transient,
)
from .errors import CVGNError, NumericalError, ValidationError
from .network import TWO_PI, FullParams, SimplifiedParams

COMMANDS = ("steady", "evolve", "sweep", "threshold", "figure", "selftest")
MODELS = {"simplified": SimplifiedParams, "full": FullParams}
RATE_KEYS = ("omega_m", "gamma", "kappa", "delta0", "omega_c")
TOP_KEYS = ("command", "model", "angular", "parameters", "payload", "precision", "log_base")
INFO_KEYS = ("version", "columns")  # written to sidecars, ignored on input
PAYLOAD_KEYS = {
    "steady": {"metrics"},
    "evolve": {"metrics", "t_final_kappa", "n_samples"},
    "sweep": {"variable", "grid", "metrics"},
    "threshold": {"variable", "search_interval", "tol", "etas"},
    "figure": {"figure_id", "grid", "curves", "t_final_kappa", "n_samples", "search_interval"},
    "selftest": set(),
}


@dataclass
class RunConfig:
    command: str
    model: str = "full"
    angular: bool = False
    parameters: dict = field(default_factory=dict)
    payload: dict = field(default_factory=dict)
    precision: int = 12
    log_base: int | str = 2

    @property
    def base(self) -> float:
        return math.e if self.log_base == "e" else float(self.log_base)

    def to_json(self) -> dict:
        return asdict(self)


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _model_fields(model: str) -> set[str]:
    return {f.name for f in fields(MODELS[model])}


def _all_param_keys() -> set[str]:
    return set().union(*(_model_fields(m) for m in MODELS))


def load_config(path: str | None, sets: list[str], command: str, model: str | None) -> RunConfig:
    raw: dict = {}
    if path is not None:
        try:
            raw = json.loads(Path(path).read_text(encoding="utf-8"))
        except OSError as exc:
            raise ValidationError(f"config: cannot read {path}: {exc.strerror}", key="config") from exc
        except json.JSONDecodeError as exc:
            raise ValidationError(f"config: malformed JSON in {path}: {exc}", key="config") from exc
        if not isinstance(raw, dict):
            raise ValidationError("config: top level must be a JSON object", key="config")
    for key in raw:
        if key not in TOP_KEYS and key not in INFO_KEYS:
            raise ValidationError(f"{key}: unknown config key", key=key)
    if raw.get("command", command) != command:
        raise ValidationError(f"command: config is for {raw['command']!r}, not {command!r}", key="command")

    cfg = RunConfig(
        command=command,
        model=raw.get("model", "full"),
        angular=raw.get("angular", False),
        parameters=dict(raw.get("parameters", {})),
        payload=dict(raw.get("payload", {})),
        precision=raw.get("precision", 12),
        log_base=raw.get("log_base", 2),
    )
    if model is not None:
        cfg.model = model
    param_keys = _all_param_keys()
    for item in sets:
        key, sep, text = item.partition("=")
        key = key.strip()
        if not sep or not key:
            raise ValidationError(f"--set: expected key=value, got {item!r}", key=item)
        value = _parse_value(text)
        if key in param_keys:
            cfg.parameters[key] = value
        elif key in ("model", "angular", "precision", "log_base"):
            setattr(cfg, key, value)
        else:
            cfg.payload[key] = value
    return cfg


def _check_top(cfg: RunConfig):
    if cfg.model not in MODELS:
        raise ValidationError(f"model: must be one of {sorted(MODELS)}, got {cfg.model!r}", key="model")
    if not isinstance(cfg.angular, bool):
        raise ValidationError(f"angular: must be true or false, got {cfg.angular!r}", key="angular")
    if not isinstance(cfg.precision, int) or isinstance(cfg.precision, bool) or not 1 <= cfg.precision <= 17:
        raise ValidationError(f"precision: must be an integer in [1, 17], got {cfg.precision!r}", key="precision")
    if cfg.log_base not in (2, "e"):
        raise ValidationError(f"log_base: must be 2 or \"e\", got {cfg.log_base!r}", key="log_base")
    allowed = PAYLOAD_KEYS[cfg.command]
    for key in cfg.payload:
        if key not in allowed:
            raise ValidationError(f"{key}: not a parameter of the {cfg.model} model or a {cfg.command} option", key=key)


def build_params(cfg: RunConfig):
    """Model parameters in rad/s; also rewrites ``cfg.parameters`` fully resolved."""
    cls = MODELS[cfg.model]
    allowed = _model_fields(cfg.model)
    values = {}
    for key, value in cfg.parameters.items():
        if key not in allowed:
            raise ValidationError(f"{key}: not a parameter of the {cfg.model} model", key=key)
        if value is None and key == "delta0":
            continue
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ValidationError(f"{key}: expected a number, got {value!r}", key=key)
        values[key] = float(value) * (TWO_PI if key in RATE_KEYS and not cfg.angular else 1.0)
    params = cls(**values)
    resolved = asdict(params)
    if not cfg.angular:
        for key in RATE_KEYS:
            if key in resolved:
                given = cfg.parameters.get(key)
                # keep user-supplied Hz values verbatim so reruns are bit-identical
                resolved[key] = float(given) if isinstance(given, (int, float)) else float(f"{resolved[key] / TWO_PI:.15g}")
    cfg.parameters = resolved
    # re-derive from the resolved record: this is exactly what a rerun will do
    rebuilt = cls(**{k: float(v) * (TWO_PI if k in RATE_KEYS and not cfg.angular else 1.0) for k, v in resolved.items()})
    return rebuilt


def _grid(value, key="grid"):
    if isinstance(value, dict):
        try:
            start, stop, num = float(value["start"]), float(value["stop"]), int(value["num"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"{key}: expected a list or {{start, stop, num}}", key=key) from exc
        if num < 1:
            raise ValidationError(f"{key}: num must be >= 1", key=key)
        value = np.linspace(start, stop, num).tolist()
    if not isinstance(value, list) or not value:
        raise ValidationError(f"{key}: expected a non-empty list of numbers", key=key)
    try:
        return [float(x) for x in value]
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"{key}: expected a non-empty list of numbers", key=key) from exc


def _metrics(cfg, kind, default=None):
    metrics = cfg.payload.get("metrics", list(default or DEFAULT_METRICS[kind]))
    if isinstance(metrics, str):
        metrics = [m for m in metrics.split(",") if m]
    cfg.payload["metrics"] = list(check_metrics(kind, metrics))
    return cfg.payload["metrics"]


def _number(cfg, key, default, kind=float):
    value = cfg.payload.get(key, default)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValidationError(f"{key}: expected a number, got {value!r}", key=key)
    cfg.payload[key] = kind(value)
    return cfg.payload[key]


def _interval(cfg, default):
    value = cfg.payload.get("search_interval", list(default))
    if not isinstance(value, list) or len(value) != 2:
        raise ValidationError("search_interval: expected [low, high]", key="search_interval")
    cfg.payload["search_interval"] = [float(v) for v in value]
    return tuple(cfg.payload["search_interval"])


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def _run_steady(cfg, params, jobs):
    kind = model_kind(params)
    metrics = _metrics(cfg, kind)
    values = compute_metrics(steady_state(params), kind, metrics, cfg.base)
    return SweepResult("eta", [params.eta], {m: [values[m]] for m in metrics})


def _run_evolve(cfg, params, jobs):
    kind = model_kind(params)
    default = ("discord_o1o2", "ln_oooo_mm") if kind == "full" else None
    metrics = _metrics(cfg, kind, default)
    t_final = _number(cfg, "t_final_kappa", 60.0)
    n_samples = _number(cfg, "n_samples", 1500, int)
    return transient(params, t_final, metrics, n_samples=n_samples, base=cfg.base)


def _run_sweep(cfg, params, jobs):
    kind = model_kind(params)
    variable = cfg.payload.get("variable")
    if variable not in _model_fields(cfg.model):
        raise ValidationError(f"variable: {variable!r} is not a parameter of the {cfg.model} model", key="variable")
    if "grid" not in cfg.payload:
        raise ValidationError("grid: required for sweep", key="grid")
    grid = _grid(cfg.payload["grid"])
    cfg.payload["grid"] = grid
    metrics = _metrics(cfg, kind)
    scale = TWO_PI if variable in RATE_KEYS and not cfg.angular else 1.0
    res = sweep(params, variable, [g * scale for g in grid], metrics, cfg.base, jobs)
    res.grid = np.asarray(grid, dtype=float)  # report in the units the user gave
    return res


def _run_threshold(cfg, params, jobs):
    if cfg.model != "full":
        raise ValidationError("model: threshold search needs the full model", key="model")
    variable = cfg.payload.setdefault("variable", "n_m")
    if variable != "n_m":
        raise ValidationError(f"variable: thresholds are searched in n_m, got {variable!r}", key="variable")
    interval = _interval(cfg, (0.0, 400.0))
    tol = _number(cfg, "tol", 0.5)
    etas = _grid(cfg.payload.get("etas", [params.eta]), "etas")
    cfg.payload["etas"] = etas
    if len(etas) == 1:
        n_th = find_threshold(params.replace(eta=etas[0]), "n_m", interval, tol)
        return SweepResult("eta", etas, {"n_th": [n_th]})
    return threshold_curve(params, etas, interval, tol, jobs)


def _run_figure(cfg, params, jobs):
    figure_id = cfg.payload["figure_id"]
    overrides = {k: v for k, v in asdict(params).items()}
    overrides.update({k: v for k, v in cfg.payload.items() if k != "figure_id"})
    return figure_dataset(figure_id, overrides, cfg.base, jobs)


RUNNERS = {
    "steady": _run_steady,
    "evolve": _run_evolve,
    "sweep": _run_sweep,
    "threshold": _run_threshold,
    "figure": _run_figure,
}


def figure_model(figure_id: str) -> str:
    if figure_id not in FIGURES:
        raise ValidationError(f"figure_id: unknown figure {figure_id!r}; known: {', '.join(FIGURES)}", key="figure_id")
    return "simplified" if figure_id in ("fig2a", "fig2b") else "full"


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------

def format_number(x, precision: int) -> str:
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    s = f"{x:.{precision}g}"
    return "0" if s == "-0" else s


def render_csv(result: SweepResult, precision: int) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(result.columns)
    for row in result.rows():
        writer.writerow([format_number(v, precision) for v in row[:-1]] + [str(row[-1])])
    return buf.getvalue()


def render_meta(cfg: RunConfig, result: SweepResult) -> str:
    meta = cfg.to_json()
    meta["version"] = __version__
    meta["columns"] = result.columns
    return json.dumps(meta, indent=2, sort_keys=True) + "\n"


def _write(path: Path, text: str):
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise ValidationError(f"output: cannot write {path}: {exc.strerror}", key="output") from exc


def meta_path(output: Path) -> Path:
    return output.with_suffix(".meta.json")


# ---------------------------------------------------------------------------
# selftest
# ---------------------------------------------------------------------------

def selftest(out=sys.stdout) -> bool:
    """Cheap sanity checks on exactly solvable cases; prints one line per check."""
    from . import gaussian as g
    from .dynamics import evolve_covariance, solve_steady
    from .network import build_simplified

    def tmsv_ln():
        r = 0.5
        return abs(g.log_negativity_two_mode(g.two_mode_squeezed_vacuum(r)) - 2 * r / math.log(2)) < 1e-8

    def product_discord():
        return g.gaussian_discord(g.thermal([1.0, 3.0])) == 0.0

    def vacuum_physical():
        return bool(np.allclose(g.symplectic_eigenvalues(g.vacuum(3)), 0.5))

    def eta_zero_independent():
        c = solve_steady(build_simplified(SimplifiedParams(eta=0.0, n_in=2.0)))
        return g.gaussian_discord(c) == 0.0 and np.allclose(c, 1.5 * np.eye(4))

    def steady_matches_evolution():
        dd = build_simplified(SimplifiedParams(kappa=1.0, eta=0.5, n_in=1.0))
        c = evolve_covariance(dd, g.vacuum(2), 40.0, 0.01, sample_every=10**6).states[-1]
        return bool(np.allclose(c, solve_steady(dd), rtol=1e-8, atol=1e-10))

    def rejects_bad_eta():
        try:
            SimplifiedParams(eta=1.5)
        except ValidationError:
            return True
        return False

    checks = [tmsv_ln, product_discord, vacuum_physical, eta_zero_independent, steady_matches_evolution, rejects_bad_eta]
    ok = True
    for check in checks:
        try:
            passed = bool(check())
        except CVGNError as exc:
            passed = False
            print(f"  error in {check.__name__}: {exc}", file=out)
        ok &= passed
        print(f"{'PASS' if passed else 'FAIL'} {check.__name__}", file=out)
    return ok


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _jobs_default():
    env = os.environ.get("CVGN_JOBS")
    if env is None:
        return 1
    try:
        return max(1, int(env))
    except ValueError:
        raise ValidationError(f"CVGN_JOBS: expected an integer, got {env!r}", key="CVGN_JOBS") from None


def make_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration (e.g. a previous .meta.json)")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override one entry; repeatable")
    common.add_argument("--model", choices=sorted(MODELS), help="model to run (default: full)")
    common.add_argument("-o", "--output", help="CSV path; a .meta.json sidecar is written next to it (default: stdout)")
    common.add_argument("--precision", type=int, help="significant digits in the CSV (default 12)")
    common.add_argument("--log-base", choices=["2", "e"], help="logarithm base of entropies and negativities")
    common.add_argument("--jobs", type=int, help="worker processes for sweeps (default: $CVGN_JOBS or 1)")

    parser = _Parser(prog="cvgn", description="Gaussian network simulator for fiber-coupled optomechanical cavities.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("steady", parents=[common], help="steady-state metrics (one row)")
    sub.add_parser("evolve", parents=[common], help="metrics along a transient, time in units of 1/kappa")
    sub.add_parser("sweep", parents=[common], help="steady-state metrics over a parameter grid")
    sub.add_parser("threshold", parents=[common], help="largest n_m with stationary optical/mechanical entanglement")
    fig = sub.add_parser("figure", parents=[common], help="dataset behind one of the standard figures")
    fig.add_argument("figure_id", nargs="?", help=", ".join(FIGURES))
    sub.add_parser("selftest", help="run quick consistency checks")
    return parser


def run(argv=None, stdout=None) -> int:
    stdout = stdout or sys.stdout
    try:
        args = make_parser().parse_args(argv)
    except SystemExit as exc:  # --help, --version and usage errors
        return int(exc.code or 0)
    if args.command == "selftest":
        return 0 if selftest(stdout) else 2
    try:
        cfg = load_config(args.config, args.set, args.command, args.model)
        if args.precision is not None:
            cfg.precision = args.precision
        if args.log_base is not None:
            cfg.log_base = 2 if args.log_base == "2" else "e"
        if args.command == "figure":
            figure_id = args.figure_id or cfg.payload.get("figure_id")
            if figure_id is None:
                raise ValidationError("figure_id: required", key="figure_id")
            cfg.payload["figure_id"] = figure_id
            cfg.model = figure_model(figure_id)
        _check_top(cfg)
        jobs = args.jobs if args.jobs is not None else _jobs_default()
        if jobs < 1:
            raise ValidationError(f"jobs: must be >= 1, got {jobs}", key="jobs")
        params = build_params(cfg)
        result = RUNNERS[cfg.command](cfg, params, jobs)
        text = render_csv(result, cfg.precision)
        if args.output:
            out = Path(args.output)
            _write(out, text)
            _write(meta_path(out), render_meta(cfg, result))
        else:
            stdout.write(text)
    except ValidationError as exc:
        print(f"cvgn: error: {exc}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"cvgn: numerical failure: {exc}", file=sys.stderr)
        return 2
    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
