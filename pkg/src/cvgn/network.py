"""Drift/diffusion builders for the fiber-coupled two-cavity network.

Two models are provided:

* the simplified model: two optical modes coupled through a lossy fiber whose
  directional inputs carry thermal noise (``build_simplified``);
* the full optomechanical network: each optical mode also couples by radiation
  pressure to a damped mechanical mode, linearised around the classical mean
  field (``mean_field`` + ``build_full_linearized``).

Everything is in angular units (rad/s). Quadrature ordering for the full model
is ``(q1, p1, x1, y1, q2, p2, x2, y2)``, i.e. modes ``(M1, O1, M2, O2)``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .errors import ConvergenceError, ValidationError

TWO_PI = 2.0 * math.pi

# mode indices of the full model
M1, O1, M2, O2 = 0, 1, 2, 3
FULL_MODE_LABELS = ("M1", "O1", "M2", "O2")
SIMPLIFIED_MODE_LABELS = ("O1", "O2")


def _require(cond, key, message):
    if not cond:
        raise ValidationError(f"{key}: {message}", key=key)


def _finite(params):
    for k, v in asdict(params).items():
        if v is not None and not math.isfinite(v):
            raise ValidationError(f"{k}: must be finite, got {v}", key=k)


@dataclass(frozen=True)
class SimplifiedParams:
    """Two identical cavities linked by a fiber of transmissivity ``eta``.

    ``omega_c`` is kept for completeness; the steady correlations do not
    depend on it and the default builder works in the co-rotating frame.
    """

    kappa: float = TWO_PI * 215e3
    eta: float = 0.25
    n_in: float = 2.0
    omega_c: float = 0.0

    def __post_init__(self):
        _finite(self)
        _require(self.kappa > 0, "kappa", f"must be > 0, got {self.kappa}")
        _require(0.0 <= self.eta <= 1.0, "eta", f"must be in [0, 1], got {self.eta}")
        _require(self.n_in >= 0, "n_in", f"must be >= 0, got {self.n_in}")

    def replace(self, **changes) -> "SimplifiedParams":
        return replace(self, **changes)


@dataclass(frozen=True)
class FullParams:
    """Parameters of the linearised optomechanical network, all rates in rad/s.

    Defaults are the realistic setup used throughout: ``omega_m/2pi = 947 kHz``,
    ``gamma/2pi = 140 Hz``, ``kappa/2pi = 215 kHz``, ``delta0 = -omega_m``,
    ``g0 = 24`` and ``drive_e = 4e11`` (the last two always in rad/s).
    ``delta0=None`` means ``-omega_m``.
    """

    omega_m: float = TWO_PI * 947e3
    gamma: float = TWO_PI * 140.0
    kappa: float = TWO_PI * 215e3
    g0: float = 24.0
    drive_e: float = 4e11
    eta: float = 0.25
    n_m: float = 240.0
    n_in: float = 0.0
    delta0: float | None = None

    def __post_init__(self):
        if self.delta0 is None:
            object.__setattr__(self, "delta0", -self.omega_m)
        _finite(self)
        for key in ("omega_m", "gamma", "kappa", "g0"):
            _require(getattr(self, key) > 0, key, f"must be > 0, got {getattr(self, key)}")
        _require(self.drive_e >= 0, "drive_e", f"must be >= 0, got {self.drive_e}")
        _require(0.0 <= self.eta <= 1.0, "eta", f"must be in [0, 1], got {self.eta}")
        _require(self.n_m >= 0, "n_m", f"must be >= 0, got {self.n_m}")
        _require(self.n_in >= 0, "n_in", f"must be >= 0, got {self.n_in}")

    def replace(self, **changes) -> "FullParams":
        # keep delta0 tied to omega_m unless it was set explicitly
        if "omega_m" in changes and "delta0" not in changes and self.delta0 == -self.omega_m:
            changes["delta0"] = None
        return replace(self, **changes)


@dataclass(frozen=True)
class MeanFieldState:
    a_bar_1: complex
    a_bar_2: complex
    q_bar_1: float
    q_bar_2: float
    p_bar_1: float = 0.0
    p_bar_2: float = 0.0

    @property
    def a_bar(self) -> tuple[complex, complex]:
        return (self.a_bar_1, self.a_bar_2)

    @property
    def q_bar(self) -> tuple[float, float]:
        return (self.q_bar_1, self.q_bar_2)


@dataclass
class DriftDiffusion:
    """Linear system ``dC/dt = A C + C A^T + D``."""

    a: np.ndarray
    d: np.ndarray
    mode_labels: tuple[str, ...] = field(default=())

    def __post_init__(self):
        self.a = np.asarray(self.a, dtype=float)
        self.d = np.asarray(self.d, dtype=float)
        n = self.a.shape[0]
        if self.a.shape != (n, n) or self.d.shape != (n, n) or n % 2:
            raise ValidationError(f"drift {self.a.shape} and diffusion {self.d.shape} must be equal 2n x 2n", key="a")
        scale = max(1.0, float(np.max(np.abs(self.d))))
        if np.max(np.abs(self.d - self.d.T)) > 1e-12 * scale:
            raise ValidationError("diffusion matrix is not symmetric", key="d")
        if np.linalg.eigvalsh(0.5 * (self.d + self.d.T))[0] < -1e-12 * scale:
            raise ValidationError("diffusion matrix is not positive semidefinite", key="d")
        if not self.mode_labels:
            self.mode_labels = tuple(f"mode{i}" for i in range(n // 2))

    @property
    def n_modes(self) -> int:
        return self.a.shape[0] // 2


# ---------------------------------------------------------------------------
# optical network: fiber coupling and its noise
# ---------------------------------------------------------------------------

def _fiber_blocks(kappa, eta, n_in):
    """Drift and diffusion of the two optical modes, 4x4 over ``(x1, y1, x2, y2)``.

    Noise on cavity 1 is ``-sqrt(kappa) (d_R + sqrt(eta) d_L + sqrt(1-eta) h_L)``
    and symmetrically on cavity 2; ``d_R, d_L`` are thermal with occupation
    ``n_in`` and ``h_R, h_L`` are vacuum. The two cavities share the ``d``
    inputs, hence the cross diffusion ``kappa sqrt(eta) (2 n_in + 1)``.
    """
    se = math.sqrt(eta)
    swap = np.array([[0.0, 1.0], [1.0, 0.0]])
    a = -kappa * (np.eye(4) + se * np.kron(swap, np.eye(2)))
    local = kappa * ((1.0 + eta) * n_in + 1.0)
    cross = kappa * se * (2.0 * n_in + 1.0)
    d = local * np.eye(4) + cross * np.kron(swap, np.eye(2))
    return a, d


def build_simplified(params: SimplifiedParams, rotating_frame: bool = True) -> DriftDiffusion:
    """Drift/diffusion of the simplified two-cavity model (zero propagation delay).

    With ``rotating_frame=False`` the free rotation at ``omega_c`` is kept in
    the drift; steady correlations are unchanged.
    """
    a, d = _fiber_blocks(params.kappa, params.eta, params.n_in)
    if not rotating_frame:
        w = params.omega_c
        rot = np.array([[0.0, w], [-w, 0.0]])
        a = a + np.kron(np.eye(2), rot)
    return DriftDiffusion(a, d, SIMPLIFIED_MODE_LABELS)


# ---------------------------------------------------------------------------
# full optomechanical model
# ---------------------------------------------------------------------------

def classical_rhs(params: FullParams, state: MeanFieldState) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Time derivatives ``(da, dq, dp)`` of the classical mean-value equations."""
    a = np.array(state.a_bar, dtype=complex)
    q = np.array(state.q_bar, dtype=float)
    p = np.array([state.p_bar_1, state.p_bar_2], dtype=float)
    se = math.sqrt(params.eta)
    k = params.kappa
    detuning = params.delta0 + params.g0 * q
    da = 1j * detuning * a + params.drive_e - k * a - k * se * a[::-1]
    dq = params.omega_m * p
    dp = -params.omega_m * q - params.gamma * p + params.g0 * np.abs(a) ** 2
    return da, dq, dp


def mean_field_residual(params: FullParams, state: MeanFieldState) -> float:
    """Largest component of the classical right-hand side at ``state``."""
    da, dq, dp = classical_rhs(params, state)
    return float(max(np.max(np.abs(da)), np.max(np.abs(dq)), np.max(np.abs(dp))))


def _cavity_amplitudes(params, q):
    """Solve the linear 2x2 cavity equations for fixed mirror displacements ``q``."""
    k = params.kappa
    se = math.sqrt(params.eta)
    detuning = params.delta0 + params.g0 * np.asarray(q)
    m = np.array(
        [
            [k - 1j * detuning[0], k * se],
            [k * se, k - 1j * detuning[1]],
        ]
    )
    return np.linalg.solve(m, np.full(2, params.drive_e, dtype=complex))


def _state_from_amplitudes(params, a):
    q = params.g0 * np.abs(a) ** 2 / params.omega_m
    return MeanFieldState(complex(a[0]), complex(a[1]), float(q[0]), float(q[1]))


def _iterate(params, q, damping, max_iter, tol):
    state = _state_from_amplitudes(params, _cavity_amplitudes(params, q))
    for _ in range(max_iter):
        if mean_field_residual(params, state) <= tol:
            return state, True
        a = _cavity_amplitudes(params, q)
        q = (1.0 - damping) * q + damping * params.g0 * np.abs(a) ** 2 / params.omega_m
        state = _state_from_amplitudes(params, _cavity_amplitudes(params, q))
    return state, mean_field_residual(params, state) <= tol


def mean_field(
    params: FullParams,
    damping: float = 0.5,
    max_iter: int = 10_000,
    rtol: float = 1e-12,
    fallback: bool = True,
) -> MeanFieldState:
    """Classical fixed point of the driven optomechanical equations.

    Damped fixed-point iteration on the mirror displacements; for given
    displacements the cavity amplitudes solve the (linear) cavity equations
    exactly. If the iteration stalls, the classical equations are integrated
    in time from the last iterate and the iteration is restarted there.
    """
    if params.drive_e == 0:
        return MeanFieldState(0j, 0j, 0.0, 0.0)
    tol = rtol * params.drive_e
    state, ok = _iterate(params, np.zeros(2), damping, max_iter, tol)
    if not ok and fallback:
        from .dynamics import evolve_mean

        guess = evolve_mean(params, state)
        state, ok = _iterate(params, np.array(guess.q_bar), damping, max_iter, tol)
    if not ok:
        residual = mean_field_residual(params, state)
        raise ConvergenceError(f"mean field did not converge; last residual {residual:.3g}", residual=residual)
    return state


def effective_couplings(params: FullParams, mf: MeanFieldState):
    """Per-cavity ``(detuning, G_R, G_I)`` of the linearised dynamics."""
    out = []
    for a, q in zip(mf.a_bar, mf.q_bar):
        out.append(
            (
                params.delta0 + params.g0 * q,
                math.sqrt(2.0) * params.g0 * a.real,
                math.sqrt(2.0) * params.g0 * a.imag,
            )
        )
    return out


def build_full_linearized(
    params: FullParams, mf: MeanFieldState | None = None, mf_rtol: float = 1e-6
) -> DriftDiffusion:
    """Fluctuation drift/diffusion (8x8) of the optomechanical network around ``mf``.

    ``mf`` defaults to ``mean_field(params)``. A supplied mean field is
    rechecked: its classical residual must be below ``mf_rtol * drive_e``.
    """
    if mf is None:
        mf = mean_field(params)
    else:
        residual = mean_field_residual(params, mf)
        if residual > mf_rtol * max(params.drive_e, 1.0):
            raise ValidationError(
                f"mf: not a fixed point for these parameters (residual {residual:.3g})", key="mf"
            )
    a_opt, d_opt = _fiber_blocks(params.kappa, params.eta, params.n_in)
    a = np.zeros((8, 8))
    d = np.zeros((8, 8))
    opt = [2, 3, 6, 7]
    a[np.ix_(opt, opt)] = a_opt
    d[np.ix_(opt, opt)] = d_opt
    for j, (detuning, g_r, g_i) in enumerate(effective_couplings(params, mf)):
        q, p, x, y = 4 * j, 4 * j + 1, 4 * j + 2, 4 * j + 3
        a[q, p] = params.omega_m
        a[p, q] = -params.omega_m
        a[p, p] = -params.gamma
        a[p, x] = g_r
        a[p, y] = g_i
        a[x, y] = -detuning
        a[y, x] = detuning
        a[x, q] = -g_i
        a[y, q] = g_r
        d[p, p] = params.gamma * (2.0 * params.n_m + 1.0)
    return DriftDiffusion(a, d, FULL_MODE_LABELS)


def stability(dd: DriftDiffusion) -> tuple[bool, float]:
    """``(is_stable, max real part of eig(A))``; stable means max real part < -1e-12."""
    max_re = float(np.max(np.linalg.eigvals(dd.a).real))
    return max_re < -1e-12, max_re


def cavity_swap(n_modes_per_cavity: int) -> np.ndarray:
    """Permutation matrix exchanging cavity 1 and cavity 2 quadratures."""
    k = 2 * n_modes_per_cavity
    p = np.zeros((2 * k, 2 * k))
    p[:k, k:] = np.eye(k)
    p[k:, :k] = np.eye(k)
    return p
