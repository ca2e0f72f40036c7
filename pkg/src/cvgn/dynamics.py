"""Steady state and time evolution of linear Gaussian dynamics.

Covariance dynamics: ``dC/dt = A C + C A^T + D``. The steady state solves
the Lyapunov equation ``A C + C A^T + D = 0`` through its vectorised form;
transients use fixed-step RK4 with symmetrisation after every step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import IntegrationBlowupError, NumericalError, UnstableSystemError, ValidationError
from .gaussian import PHYSICAL_TOL, symplectic_eigenvalues, validate_covariance
from .network import DriftDiffusion, FullParams, MeanFieldState, classical_rhs, stability


@dataclass
class Trajectory:
    """Covariance snapshots; ``times`` in seconds."""

    times: np.ndarray
    states: np.ndarray  # shape (len(times), 2n, 2n)

    def __len__(self):
        return len(self.times)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.states = np.asarray(self.states, dtype=float)
        if self.states.shape[0] != self.times.shape[0]:
            raise ValidationError("times and states must have the same length", key="times")


def lyapunov_operator(a: np.ndarray) -> np.ndarray:
    """Matrix of ``C -> A C + C A^T`` acting on row-major ``vec(C)``."""
    eye = np.eye(a.shape[0])
    return np.kron(a, eye) + np.kron(eye, a)


def solve_steady(dd: DriftDiffusion, check_residual: bool = True) -> np.ndarray:
    """Steady covariance of a stable linear system.

    Dense solve of ``(A (x) I + I (x) A) vec(C) = -vec(D)`` followed by one step
    of iterative refinement. The residual ``||A C + C A^T + D||_F`` must be at
    most ``1e-10 * max(1, ||D||_F)``.
    """
    stable, max_re = stability(dd)
    if not stable:
        raise UnstableSystemError(f"drift matrix is not Hurwitz (max real part {max_re:.3g}); no steady state")
    a, d = dd.a, dd.d
    n = a.shape[0]
    op = lyapunov_operator(a)
    try:
        vec = np.linalg.solve(op, -d.reshape(-1))
        c = vec.reshape(n, n)
        r = a @ c + c @ a.T + d
        c = c + np.linalg.solve(op, -r.reshape(-1)).reshape(n, n)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"singular Lyapunov system: {exc}") from exc
    c = 0.5 * (c + c.T)
    if check_residual:
        res = np.linalg.norm(a @ c + c @ a.T + d)
        bound = 1e-10 * max(1.0, float(np.linalg.norm(d)))
        if not res <= bound:
            raise NumericalError(f"Lyapunov residual {res:.3g} exceeds {bound:.3g}")
    return c


def default_dt(dd: DriftDiffusion) -> float:
    """``0.01`` over the spectral radius of ``A``: resolves the fastest rate in the system."""
    rho = float(np.max(np.abs(np.linalg.eigvals(dd.a))))
    if rho == 0:
        raise ValidationError("drift matrix is zero; supply dt explicitly", key="dt")
    return 0.01 / rho


def _rk4_step(a, d, c, dt):
    def rhs(x):
        ax = a @ x
        return ax + ax.T + d

    k1 = rhs(c)
    k2 = rhs(c + 0.5 * dt * k1)
    k3 = rhs(c + 0.5 * dt * k2)
    k4 = rhs(c + dt * k3)
    c = c + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return 0.5 * (c + c.T)


def evolve_covariance(
    dd: DriftDiffusion,
    c0,
    t_final: float,
    dt: float | None = None,
    sample_every: int = 1,
    check_physical: bool = True,
) -> Trajectory:
    """Integrate the covariance ODE from ``c0`` to ``t_final`` with fixed-step RK4.

    Snapshots are kept at ``t = 0``, every ``sample_every`` steps and at the
    final time. The last step is shortened so the run ends exactly at
    ``t_final``. Each snapshot is checked for physicality (symplectic
    eigenvalues >= 1/2 - 1e-9) unless ``check_physical`` is false.
    """
    c = validate_covariance(c0).copy()
    if c.shape != dd.a.shape:
        raise ValidationError(f"c0 has shape {c.shape}, system is {dd.a.shape}", key="c0")
    if dt is None:
        dt = default_dt(dd)
    if not dt > 0:
        raise ValidationError(f"dt must be > 0, got {dt}", key="dt")
    if not t_final >= 0:
        raise ValidationError(f"t_final must be >= 0, got {t_final}", key="t_final")
    if sample_every < 1:
        raise ValidationError(f"sample_every must be >= 1, got {sample_every}", key="sample_every")

    n_steps = int(math.ceil(t_final / dt - 1e-9)) if t_final > 0 else 0
    times = [0.0]
    states = [c.copy()]
    t = 0.0
    for step in range(1, n_steps + 1):
        h = min(dt, t_final - t) if step == n_steps else dt
        c = _rk4_step(dd.a, dd.d, c, h)
        t = t_final if step == n_steps else step * dt
        if step % sample_every == 0 or step == n_steps:
            if not np.all(np.isfinite(c)):
                raise IntegrationBlowupError(f"non-finite covariance at t={t:.3g}; reduce dt (now {dt:.3g})")
            if check_physical:
                _check_snapshot(c, t, dt)
            times.append(t)
            states.append(c.copy())
    return Trajectory(np.array(times), np.array(states))


def _check_snapshot(c, t, dt):
    try:
        nu = symplectic_eigenvalues(c)[0]
    except NumericalError:
        nu = -math.inf
    if nu < 0.5 - PHYSICAL_TOL:
        raise IntegrationBlowupError(
            f"unphysical covariance at t={t:.3g} (min symplectic eigenvalue {nu:.3g}); reduce dt (now {dt:.3g})"
        )


# ---------------------------------------------------------------------------
# classical mean values
# ---------------------------------------------------------------------------

def _pack(state: MeanFieldState) -> np.ndarray:
    return np.array(
        [
            state.a_bar_1.real, state.a_bar_1.imag, state.a_bar_2.real, state.a_bar_2.imag,
            state.q_bar_1, state.q_bar_2, state.p_bar_1, state.p_bar_2,
        ]
    )


def _unpack(v: np.ndarray) -> MeanFieldState:
    return MeanFieldState(complex(v[0], v[1]), complex(v[2], v[3]), float(v[4]), float(v[5]), float(v[6]), float(v[7]))


def _classical_vector_rhs(params, v):
    # scalar arithmetic: this runs ~1e5 times per integration
    ar1, ai1, ar2, ai2, q1, q2, p1, p2 = v
    k = params.kappa
    ks = k * math.sqrt(params.eta)
    g0, e, wm = params.g0, params.drive_e, params.omega_m
    d1 = params.delta0 + g0 * q1
    d2 = params.delta0 + g0 * q2
    return (
        -d1 * ai1 + e - k * ar1 - ks * ar2,
        d1 * ar1 - k * ai1 - ks * ai2,
        -d2 * ai2 + e - k * ar2 - ks * ar1,
        d2 * ar2 - k * ai2 - ks * ai1,
        wm * p1,
        wm * p2,
        -wm * q1 - params.gamma * p1 + g0 * (ar1 * ar1 + ai1 * ai1),
        -wm * q2 - params.gamma * p2 + g0 * (ar2 * ar2 + ai2 * ai2),
    )


def _rk4_tuple(f, v, dt):
    k1 = f(v)
    k2 = f(tuple(x + 0.5 * dt * y for x, y in zip(v, k1)))
    k3 = f(tuple(x + 0.5 * dt * y for x, y in zip(v, k2)))
    k4 = f(tuple(x + dt * y for x, y in zip(v, k3)))
    return tuple(x + dt / 6.0 * (a + 2.0 * b + 2.0 * c + d) for x, a, b, c, d in zip(v, k1, k2, k3, k4))


def evolve_mean(
    params: FullParams,
    initial: MeanFieldState | None = None,
    t_final: float | None = None,
    dt: float | None = None,
) -> MeanFieldState:
    """RK4 integration of the classical mean-value equations; returns the final state.

    Defaults: start from rest with empty cavities, ``dt = 0.01 / max(omega_m,
    kappa, |delta0|)`` and ``t_final = 200 / kappa``.
    """
    if initial is None:
        initial = MeanFieldState(0j, 0j, 0.0, 0.0)
    if dt is None:
        dt = 0.01 / max(params.omega_m, params.kappa, abs(params.delta0))
    if t_final is None:
        t_final = 200.0 / params.kappa
    v = tuple(float(x) for x in _pack(initial))
    n_steps = int(math.ceil(t_final / dt - 1e-9))
    f = lambda x: _classical_vector_rhs(params, x)  # noqa: E731
    for i in range(n_steps):
        v = _rk4_tuple(f, v, dt)
        if i % 1000 == 0 and not all(math.isfinite(x) for x in v):
            raise IntegrationBlowupError("classical mean values diverged; reduce dt")
    if not all(math.isfinite(x) for x in v):
        raise IntegrationBlowupError("classical mean values diverged; reduce dt")
    return _unpack(np.array(v))
