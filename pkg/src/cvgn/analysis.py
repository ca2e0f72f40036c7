"""Parameter sweeps, entanglement thresholds and figure datasets.

A "model" here is either a ``SimplifiedParams`` or a ``FullParams`` instance;
``steady_state`` builds the right drift/diffusion pair and solves for the
stationary covariance. Metrics are named functions of that covariance (see
``METRICS``). Datasets are returned as ``SweepResult`` tables: one grid
column plus named metric columns, ready for CSV.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import partial
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .dynamics import default_dt, evolve_covariance, solve_steady
from .errors import BracketError, NumericalError, UnstableSystemError, ValidationError
from .gaussian import (
    BipartitionSpec,
    PHYSICAL_TOL,
    symplectic_eigenvalues,
    gaussian_discord,
    log_negativity_bipartition,
    log_negativity_two_mode,
    plus_minus_rotation,
    reduce_modes,
    rotate_basis,
    thermal,
)
from .network import (
    M1,
    M2,
    O1,
    O2,
    DriftDiffusion,
    FullParams,
    SimplifiedParams,
    build_full_linearized,
    build_simplified,
    mean_field,
    stability,
)

ENTANGLEMENT_CUTOFF = 1e-8

Model = SimplifiedParams | FullParams


@dataclass
class SweepResult:
    """Table of metrics over a one-dimensional grid."""

    variable_name: str
    grid: np.ndarray
    metrics: dict[str, np.ndarray]
    stable: np.ndarray | None = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=float)
        self.metrics = {k: np.asarray(v, dtype=float) for k, v in self.metrics.items()}
        if self.stable is None:
            self.stable = np.ones(len(self.grid), dtype=bool)
        self.stable = np.asarray(self.stable, dtype=bool)
        for k, v in self.metrics.items():
            if len(v) != len(self.grid):
                raise ValidationError(f"{k}: column has {len(v)} rows, grid has {len(self.grid)}", key=k)

    @property
    def columns(self) -> list[str]:
        return [self.variable_name, *self.metrics, "stable"]

    def rows(self):
        for i, x in enumerate(self.grid):
            yield [x, *(v[i] for v in self.metrics.values()), int(self.stable[i])]


# ---------------------------------------------------------------------------
# model plumbing
# ---------------------------------------------------------------------------

def model_kind(model: Model) -> str:
    if isinstance(model, FullParams):
        return "full"
    if isinstance(model, SimplifiedParams):
        return "simplified"
    raise ValidationError(f"model: unknown model type {type(model).__name__}", key="model")


def build_model(model: Model) -> DriftDiffusion:
    if isinstance(model, FullParams):
        return build_full_linearized(model, mean_field(model))
    return build_simplified(model)


def solve_physical(dd: DriftDiffusion) -> np.ndarray:
    """``solve_steady`` plus a physicality check on the result.

    The Markovian Brownian damping of the mechanics is only valid for
    ``gamma << omega_m``; far outside that regime the exact Lyapunov solution
    violates the uncertainty principle, which is reported here as a numerical
    failure rather than passed on to the metrics.
    """
    c = solve_steady(dd)
    nu = symplectic_eigenvalues(c)[0]
    if nu < 0.5 - PHYSICAL_TOL:
        raise NumericalError(
            f"steady state is unphysical (smallest symplectic eigenvalue {nu:.4g}); "
            "the damping model is outside its validity range"
        )
    return c


def steady_state(model: Model) -> np.ndarray:
    return solve_physical(build_model(model))


# ---------------------------------------------------------------------------
# metrics
# ---------------------------------------------------------------------------

class PlusMinusEntanglement(NamedTuple):
    e_plus: float
    e_minus: float
    e_cross_pm: float


def plus_minus_decomposition(c, base: float = 2.0, sector_tol: float = 1e-8) -> PlusMinusEntanglement:
    """Two-mode negativities in the ``(q1 +/- q2)/sqrt2``, ``(x1 +/- x2)/sqrt2`` basis.

    ``c`` is a four-mode covariance ordered ``(M1, O1, M2, O2)``. Returns the
    negativities of ``(M+, O+)``, ``(M-, O-)`` and ``(M+, O-)``. The state
    must be symmetric under exchange of the two cavities: the blocks coupling
    the ``+`` and ``-`` sectors must vanish to ``sector_tol`` relative to ``C``.
    """
    c = np.asarray(c, dtype=float)
    if c.shape != (8, 8):
        raise ValidationError(f"covariance: expected four modes, got shape {c.shape}", key="covariance")
    rotated = rotate_basis(c, plus_minus_rotation(4, [(M1, M2), (O1, O2)]))
    plus, minus = [0, 1, 2, 3], [4, 5, 6, 7]
    leak = np.max(np.abs(rotated[np.ix_(plus, minus)]))
    if leak > sector_tol * max(1.0, float(np.max(np.abs(c)))):
        raise ValidationError(f"covariance: state is not cavity-symmetric (+/- sector coupling {leak:.3g})", key="covariance")
    # slots after rotation: 0 = M+, 1 = O+, 2 = M-, 3 = O-
    return PlusMinusEntanglement(
        log_negativity_two_mode(reduce_modes(rotated, [0, 1]), base),
        log_negativity_two_mode(reduce_modes(rotated, [2, 3]), base),
        log_negativity_two_mode(reduce_modes(rotated, [0, 3]), base),
    )


def _optical(kind):
    return (O1, O2) if kind == "full" else (0, 1)


def _discord_oo(c, kind, base):
    return gaussian_discord(reduce_modes(c, _optical(kind)), 0, base)


def _ln_oo(c, kind, base):
    return log_negativity_two_mode(reduce_modes(c, _optical(kind)), base)


def _occupation_o1(c, kind, base):
    i = 2 * _optical(kind)[0]
    return 0.5 * (c[i, i] + c[i + 1, i + 1]) - 0.5


def _bip(a, b):
    spec = BipartitionSpec(a, b)
    return lambda c, kind, base: log_negativity_bipartition(c, spec, base)


def _pm(index):
    return lambda c, kind, base: plus_minus_decomposition(c, base)[index]


# name -> (models it applies to, function(c, kind, base))
METRICS: dict[str, tuple[tuple[str, ...], Callable]] = {
    "discord_o1o2": (("simplified", "full"), _discord_oo),
    "ln_o1o2": (("simplified", "full"), _ln_oo),
    "occupation_o1": (("simplified", "full"), _occupation_o1),
    "ln_oooo_mm": (("full",), _bip((O1, O2), (M1, M2))),
    "ln_o1m1": (("full",), _bip((O1,), (M1,))),
    "ln_o2m1": (("full",), _bip((O2,), (M1,))),
    "ln_oo_m1": (("full",), _bip((O1, O2), (M1,))),
    "ln_o1_mm": (("full",), _bip((O1,), (M1, M2))),
    "ln_plus": (("full",), _pm(0)),
    "ln_minus": (("full",), _pm(1)),
    "ln_cross_pm": (("full",), _pm(2)),
}

DEFAULT_METRICS = {
    "simplified": ("discord_o1o2", "ln_o1o2"),
    "full": ("discord_o1o2", "ln_o1o2", "ln_oooo_mm", "ln_o1m1", "ln_plus", "ln_minus", "ln_cross_pm"),
}


def check_metrics(kind: str, metrics: Sequence[str]) -> tuple[str, ...]:
    for m in metrics:
        if m not in METRICS:
            raise ValidationError(f"metrics: unknown metric {m!r}; known: {', '.join(METRICS)}", key="metrics")
        if kind not in METRICS[m][0]:
            raise ValidationError(f"metrics: {m!r} is not defined for the {kind} model", key="metrics")
    return tuple(metrics)


def compute_metrics(c, kind: str, metrics: Sequence[str], base: float = 2.0) -> dict[str, float]:
    check_metrics(kind, metrics)
    return {m: float(METRICS[m][1](c, kind, base)) for m in metrics}


# ---------------------------------------------------------------------------
# sweeps
# ---------------------------------------------------------------------------

def _sweep_point(model, variable, metrics, base, value):
    point = model.replace(**{variable: float(value)})
    kind = model_kind(point)
    dd = build_model(point)
    if not stability(dd)[0]:
        return False, {m: math.nan for m in metrics}
    return True, compute_metrics(solve_physical(dd), kind, metrics, base)


def _map(fn, items, jobs):
    items = list(items)
    if jobs is None or jobs <= 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def sweep(
    model: Model,
    variable: str,
    grid: Sequence[float],
    metrics: Sequence[str] | None = None,
    base: float = 2.0,
    jobs: int = 1,
) -> SweepResult:
    """Steady-state metrics of ``model`` along ``grid`` values of ``variable``.

    Unstable points get NaN metrics and ``stable = False``. Points are
    independent, so ``jobs > 1`` evaluates them in worker processes; rows are
    always returned in grid order.
    """
    kind = model_kind(model)
    if variable not in asdict(model):
        raise ValidationError(f"variable: {variable!r} is not a parameter of the {kind} model", key="variable")
    grid = [float(x) for x in grid]
    if not grid:
        raise ValidationError("grid: must not be empty", key="grid")
    metrics = check_metrics(kind, metrics or DEFAULT_METRICS[kind])
    results = _map(partial(_sweep_point, model, variable, metrics, base), grid, jobs)
    return SweepResult(
        variable,
        grid,
        {m: [r[1][m] for r in results] for m in metrics},
        [r[0] for r in results],
        {"model": kind, "parameters": asdict(model), "log_base": base},
    )


# ---------------------------------------------------------------------------
# threshold search
# ---------------------------------------------------------------------------

def entanglement_indicator(model: FullParams, metric: str = "ln_oooo_mm", cutoff: float = ENTANGLEMENT_CUTOFF) -> bool:
    dd = build_model(model)
    stable, max_re = stability(dd)
    if not stable:
        raise UnstableSystemError(f"unstable at {model} (max real part {max_re:.3g})")
    return compute_metrics(solve_physical(dd), model_kind(model), [metric])[metric] > cutoff


def find_threshold(
    params: FullParams,
    variable: str = "n_m",
    search_interval: tuple[float, float] = (0.0, 400.0),
    tol: float = 0.5,
    metric: str = "ln_oooo_mm",
    cutoff: float = ENTANGLEMENT_CUTOFF,
    prescan: int = 9,
) -> float:
    """Largest ``variable`` value at which ``metric`` stays above ``cutoff``.

    A coarse pre-scan checks that the indicator goes from entangled to
    separable exactly once inside ``search_interval``; bisection then narrows
    the bracket to ``tol`` and returns its midpoint. The result is checked
    against the indicator one unit on either side.
    """
    lo, hi = map(float, search_interval)
    if not lo < hi:
        raise ValidationError(f"search_interval: must be increasing, got {search_interval}", key="search_interval")
    check_metrics(model_kind(params), [metric])

    def indicator(x):
        return entanglement_indicator(params.replace(**{variable: x}), metric, cutoff)

    xs = np.linspace(lo, hi, max(prescan, 2))
    flags = [indicator(x) for x in xs]
    if not flags[0] or flags[-1]:
        raise BracketError(
            f"{metric} is not positive at {variable}={lo:g} and zero at {variable}={hi:g} "
            f"(indicator {flags[0]} -> {flags[-1]})"
        )
    switch = flags.index(False)
    if any(flags[switch:]):
        raise BracketError(f"{metric} is not monotone in {variable} on the pre-scan grid")
    a, b = xs[switch - 1], xs[switch]
    while b - a > tol:
        mid = 0.5 * (a + b)
        if indicator(mid):
            a = mid
        else:
            b = mid
    n_th = 0.5 * (a + b)
    if (n_th - 1 >= lo and not indicator(n_th - 1)) or (n_th + 1 <= hi and indicator(n_th + 1)):
        raise NumericalError(f"threshold {n_th:g} failed the +/-1 consistency check")
    return float(n_th)


def threshold_curve(
    params: FullParams,
    etas: Sequence[float],
    search_interval: tuple[float, float] = (0.0, 400.0),
    tol: float = 0.5,
    jobs: int = 1,
) -> SweepResult:
    """``n_th`` as a function of the fiber transmissivity."""
    fn = partial(_threshold_at, params, search_interval, tol)
    values = _map(fn, etas, jobs)
    return SweepResult(
        "eta",
        etas,
        {"n_th": values},
        metadata={"model": "full", "parameters": asdict(params), "search_interval": list(search_interval)},
    )


def _threshold_at(params, search_interval, tol, eta):
    return find_threshold(params.replace(eta=float(eta)), search_interval=search_interval, tol=tol)


# ---------------------------------------------------------------------------
# transients
# ---------------------------------------------------------------------------

def initial_state_full(n_m: float) -> np.ndarray:
    """Optical modes in vacuum, mechanical modes thermal with occupation ``n_m``."""
    return thermal([n_m, 0.0, n_m, 0.0])


def initial_state(model: Model) -> np.ndarray:
    if isinstance(model, FullParams):
        return initial_state_full(model.n_m)
    return thermal([0.0, 0.0])


def transient(
    params: Model,
    t_final_kappa: float = 60.0,
    metrics: Sequence[str] | None = None,
    dt: float | None = None,
    sample_every: int | None = None,
    n_samples: int = 1500,
    base: float = 2.0,
) -> SweepResult:
    """Metrics along the relaxation from ``initial_state(params)``.

    The full model starts with the optical modes in vacuum and the mechanical
    modes thermal at ``n_m``; the simplified model starts from vacuum. Time is
    reported in units of ``1/kappa`` (column ``t_kappa``).
    """
    kind = model_kind(params)
    if metrics is None:
        metrics = ("discord_o1o2", "ln_oooo_mm") if kind == "full" else DEFAULT_METRICS[kind]
    metrics = check_metrics(kind, metrics)
    if not t_final_kappa > 0:
        raise ValidationError(f"t_final_kappa: must be > 0, got {t_final_kappa}", key="t_final_kappa")
    if n_samples < 1:
        raise ValidationError(f"n_samples: must be >= 1, got {n_samples}", key="n_samples")
    dd = build_model(params)
    if not stability(dd)[0]:
        raise UnstableSystemError("transient requested for an unstable configuration")
    if dt is None:
        dt = default_dt(dd)
    t_final = t_final_kappa / params.kappa
    if sample_every is None:
        sample_every = max(1, int(round(t_final / dt / n_samples)))
    traj = evolve_covariance(dd, initial_state(params), t_final, dt, sample_every)
    rows = [compute_metrics(c, kind, metrics, base) for c in traj.states]
    return SweepResult(
        "t_kappa",
        traj.times * params.kappa,
        {m: [r[m] for r in rows] for m in metrics},
        metadata={"model": kind, "parameters": asdict(params), "dt": dt, "sample_every": sample_every, "log_base": base},
    )


def first_crossing(times: Sequence[float], values: Sequence[float], level: float) -> float | None:
    """First time at which ``values`` exceeds ``level``; ``None`` if never."""
    for t, v in zip(times, values):
        if v > level:
            return float(t)
    return None


# ---------------------------------------------------------------------------
# figure datasets
# ---------------------------------------------------------------------------

FIGURES = ("fig2a", "fig2b", "fig3", "fig4a", "fig4b", "fig5", "fig6", "figA7", "figA8", "figA9")

# keys that steer the dataset rather than the physics
_LAYOUT_KEYS = {"grid", "curves", "t_final_kappa", "n_samples", "search_interval"}


def _split_overrides(overrides, model_cls):
    overrides = dict(overrides or {})
    layout = {k: overrides.pop(k) for k in list(overrides) if k in _LAYOUT_KEYS}
    fields = set(model_cls.__dataclass_fields__)
    unknown = set(overrides) - fields
    if unknown:
        raise ValidationError(f"{sorted(unknown)[0]}: unknown override (not a parameter of this figure's model)", key=sorted(unknown)[0])
    return model_cls(**overrides), layout


def _label(name, variable, value):
    return f"{name}[{variable}={value:g}]"


def _curves(model, variable, grid, curve_var, curve_values, metrics, base, jobs):
    columns, stable = {}, np.ones(len(grid), dtype=bool)
    for v in curve_values:
        res = sweep(model.replace(**{curve_var: float(v)}), variable, grid, metrics, base, jobs)
        for m in metrics:
            columns[_label(m, curve_var, v)] = res.metrics[m]
        stable &= res.stable
    return columns, stable


def _transient_curves(params, curve_var, curve_values, t_final_kappa, n_samples, base):
    points = [params.replace(**{curve_var: float(v)}) for v in curve_values]
    dt = min(default_dt(build_model(p)) for p in points)
    sample_every = max(1, int(round(t_final_kappa / params.kappa / dt / n_samples)))
    columns, grid = {}, None
    for v, p in zip(curve_values, points):
        res = transient(p, t_final_kappa, dt=dt, sample_every=sample_every, base=base)
        grid = res.grid
        for m, col in res.metrics.items():
            columns[_label(m, curve_var, v)] = col
    return grid, columns, {"dt": dt, "sample_every": sample_every}


def figure_dataset(figure_id: str, overrides: dict | None = None, base: float = 2.0, jobs: int = 1) -> SweepResult:
    """Columns needed to redraw one of the standard figures.

    ``overrides`` may set any model parameter plus the layout keys ``grid``,
    ``curves``, ``t_final_kappa``, ``n_samples`` and ``search_interval``.
    """
    if figure_id not in FIGURES:
        raise ValidationError(f"figure_id: unknown figure {figure_id!r}; known: {', '.join(FIGURES)}", key="figure_id")
    simplified = figure_id in ("fig2a", "fig2b")
    model, layout = _split_overrides(overrides, SimplifiedParams if simplified else FullParams)
    meta = {"figure": figure_id, "model": model_kind(model), "parameters": asdict(model), "log_base": base}

    if figure_id == "fig2a":
        grid = layout.get("grid", np.round(np.linspace(0.0, 0.95, 20), 10))
        curves = layout.get("curves", [1.0, 2.0, 5.0])
        cols, stable = _curves(model, "eta", grid, "n_in", curves, ["discord_o1o2", "ln_o1o2"], base, jobs)
        return SweepResult("eta", grid, cols, stable, meta)
    if figure_id == "fig2b":
        grid = layout.get("grid", np.concatenate([[0.0], np.logspace(-2, 4, 25)]))
        curves = layout.get("curves", [0.25, 0.5, 0.75])
        cols, stable = _curves(model, "n_in", grid, "eta", curves, ["discord_o1o2", "ln_o1o2"], base, jobs)
        return SweepResult("n_in", grid, cols, stable, meta)
    if figure_id == "fig3":
        grid = layout.get("grid", np.round(np.linspace(0.0, 0.5, 21), 10))
        res = threshold_curve(model, grid, tuple(layout.get("search_interval", (0.0, 400.0))), jobs=jobs)
        res.metadata.update(meta)
        return res
    if figure_id == "fig4a":
        grid = layout.get("grid", np.linspace(190.0, 250.0, 61))
        curves = layout.get("curves", [0.0, 0.25])
        cols, stable = _curves(model, "n_m", grid, "eta", curves, ["ln_oooo_mm"], base, jobs)
        return SweepResult("n_m", grid, cols, stable, meta)
    if figure_id == "fig4b":
        grid = layout.get("grid", np.linspace(0.0, 250.0, 26))
        curves = layout.get("curves", [0.0, 0.25])
        cols, stable = _curves(model, "n_m", grid, "eta", curves, ["ln_o1m1"], base, jobs)
        return SweepResult("n_m", grid, cols, stable, meta)
    if figure_id == "fig6":
        grid = layout.get("grid", np.linspace(0.0, 260.0, 53))
        res = sweep(model, "n_m", grid, ["ln_plus", "ln_minus", "ln_cross_pm", "ln_oooo_mm"], base, jobs)
        res.metrics["ln_plus_plus_minus"] = res.metrics["ln_plus"] + res.metrics["ln_minus"]
        res.metadata.update(meta)
        return res

    t_final = float(layout.get("t_final_kappa", 60.0))
    n_samples = int(layout.get("n_samples", 1500))
    if figure_id == "fig5":
        res = transient(model, t_final, n_samples=n_samples, base=base)
        res.metadata.update(meta)
        return res
    curve_var, default_curves = {
        "figA7": ("n_m", [150.0, 240.0, 242.0, 244.0, 246.0, 248.0]),
        "figA8": ("eta", [0.1, 0.25, 0.5, 0.75]),
        "figA9": ("g0", [model.g0 * f for f in (1.0, 0.95, 0.9, 0.75, 0.5)]),
    }[figure_id]
    grid, cols, extra = _transient_curves(model, curve_var, layout.get("curves", default_curves), t_final, n_samples, base)
    meta.update(extra)
    return SweepResult("t_kappa", grid, cols, metadata=meta)
