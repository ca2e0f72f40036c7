"""Covariance-matrix algebra for Gaussian states.

Conventions
-----------
Quadratures are ordered mode by mode, ``(x1, y1, x2, y2, ...)`` with
``x = (a + a^dag)/sqrt(2)`` and ``y = i(a^dag - a)/sqrt(2)`` (mechanical modes
put ``(q, p)`` in the same slots). ``hbar = 1``, so the vacuum covariance is
``I/2`` and every symplectic eigenvalue of a physical state is ``>= 1/2``.

The two-mode invariants ``I1..I4`` are scaled so that the vacuum gives 1
(``I1 = 4 det C1``, ``I4 = 16 det C``); the two-mode symplectic eigenvalues
derived from them are therefore ``2 * nu`` and are ``>= 1`` for physical
states. Logarithms default to base 2; every measure takes a ``base`` keyword.

The two-mode measures evaluate the invariant polynomials in exact rational
arithmetic on the float entries of ``C``. The closed forms contain square
roots of quantities that vanish for pure states; computed in floating point,
a 1e-16 cancellation error becomes a 1e-8 error in a symplectic eigenvalue,
which the entropy function then amplifies by its log singularity at 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple, Sequence

import numpy as np

from .errors import DegeneracyError, DomainError, UnphysicalStateError, ValidationError

SYMMETRY_RTOL = 1e-12
PHYSICAL_TOL = 1e-9
PAIRING_TOL = 1e-8
PRODUCT_TOL = 1e-12
NEGATIVITY_FLOOR = 1e-12  # PT eigenvalues this close to 1/2 are rounding, not entanglement

_J = np.array([[0.0, 1.0], [-1.0, 0.0]])


# ---------------------------------------------------------------------------
# constructors and small helpers
# ---------------------------------------------------------------------------

def symplectic_form(n_modes: int) -> np.ndarray:
    """Block-diagonal ``Omega`` with ``n_modes`` blocks ``[[0, 1], [-1, 0]]``."""
    if n_modes < 1:
        raise ValidationError(f"n_modes must be positive, got {n_modes}", key="n_modes")
    return np.kron(np.eye(n_modes), _J)


def vacuum(n_modes: int) -> np.ndarray:
    return 0.5 * np.eye(2 * n_modes)


def thermal(nbar) -> np.ndarray:
    """Product of thermal states; ``nbar`` is a scalar or one occupation per mode."""
    nbar = np.atleast_1d(np.asarray(nbar, dtype=float))
    if np.any(nbar < 0):
        raise ValidationError("thermal occupation must be >= 0", key="nbar")
    return np.diag(np.repeat(nbar + 0.5, 2))


def two_mode_squeezed_vacuum(r: float) -> np.ndarray:
    """Two-mode squeezed vacuum with squeezing parameter ``r``."""
    c = 0.5 * math.cosh(2 * r)
    s = 0.5 * math.sinh(2 * r)
    return np.array(
        [
            [c, 0.0, s, 0.0],
            [0.0, c, 0.0, -s],
            [s, 0.0, c, 0.0],
            [0.0, -s, 0.0, c],
        ]
    )


def direct_sum(*covs: np.ndarray) -> np.ndarray:
    """Block-diagonal covariance of independent subsystems."""
    size = sum(c.shape[0] for c in covs)
    out = np.zeros((size, size))
    i = 0
    for c in covs:
        k = c.shape[0]
        out[i : i + k, i : i + k] = c
        i += k
    return out


def phase_rotation(thetas: Sequence[float]) -> np.ndarray:
    """Symplectic matrix rotating mode ``j`` in phase space by ``thetas[j]``."""
    blocks = [np.array([[math.cos(t), math.sin(t)], [-math.sin(t), math.cos(t)]]) for t in thetas]
    return direct_sum(*blocks)


def passive_transform(u: np.ndarray) -> np.ndarray:
    """Symplectic matrix of a real orthogonal mode mixing ``u`` (beam splitter network)."""
    u = np.asarray(u, dtype=float)
    return np.kron(u, np.eye(2))


def plus_minus_rotation(n_modes: int, pairs: Sequence[tuple[int, int]]) -> np.ndarray:
    """Symplectic map sending each pair ``(i, j)`` to ``((i+j)/sqrt2, (i-j)/sqrt2)``.

    The ``+`` combination lands in slot ``i`` and the ``-`` combination in slot
    ``j``. The matrix is its own inverse.
    """
    u = np.eye(n_modes)
    h = 1.0 / math.sqrt(2.0)
    for i, j in pairs:
        _check_modes([i, j], n_modes)
        u[np.ix_([i, j], [i, j])] = [[h, h], [h, -h]]
    return passive_transform(u)


def n_modes_of(c: np.ndarray) -> int:
    return c.shape[0] // 2


def validate_covariance(c) -> np.ndarray:
    """Return ``c`` as a float array after shape and symmetry checks."""
    c = np.asarray(c, dtype=float)
    if c.ndim != 2 or c.shape[0] != c.shape[1] or c.shape[0] % 2 or c.shape[0] == 0:
        raise ValidationError(f"covariance must be 2n x 2n, got shape {c.shape}", key="covariance")
    if not np.all(np.isfinite(c)):
        raise ValidationError("covariance has non-finite entries", key="covariance")
    scale = max(1.0, float(np.max(np.abs(c))))
    if np.max(np.abs(c - c.T)) > SYMMETRY_RTOL * scale:
        raise ValidationError("covariance matrix is not symmetric", key="covariance")
    return c


def _check_modes(modes, n_modes):
    for m in modes:
        if not (0 <= int(m) < n_modes):
            raise ValidationError(f"mode index {m} out of range for {n_modes} modes", key="modes")


def _quadrature_indices(modes):
    return [k for m in modes for k in (2 * m, 2 * m + 1)]


# ---------------------------------------------------------------------------
# symplectic spectrum
# ---------------------------------------------------------------------------

def symplectic_eigenvalues(c) -> np.ndarray:
    """Symplectic eigenvalues of ``c``, ascending.

    Computed as moduli of the eigenvalues of ``Omega @ c``, which come in
    purely imaginary conjugate pairs ``+/- i nu`` whenever ``c`` is positive
    definite. Raises ``DegeneracyError`` if that structure is violated by more
    than ``PAIRING_TOL`` (relative to the largest eigenvalue).
    """
    c = validate_covariance(c)
    n = n_modes_of(c)
    ev = np.linalg.eigvals(symplectic_form(n) @ c)
    scale = max(1.0, float(np.max(np.abs(ev))))
    if np.max(np.abs(ev.real)) > PAIRING_TOL * scale:
        raise DegeneracyError("Omega*C has eigenvalues off the imaginary axis; C is not positive definite")
    im = np.sort(ev.imag)
    pos, neg = im[n:], -im[:n][::-1]
    if np.max(np.abs(pos - neg)) > PAIRING_TOL * scale or np.any(pos < -PAIRING_TOL * scale):
        raise DegeneracyError("eigenvalues of Omega*C do not pair as +/- i*nu")
    return np.sort(0.5 * (pos + neg))


def is_physical(c, tol: float = PHYSICAL_TOL) -> bool:
    try:
        return bool(symplectic_eigenvalues(c)[0] >= 0.5 - tol)
    except DegeneracyError:
        return False


def require_physical(c, tol: float = PHYSICAL_TOL) -> np.ndarray:
    c = validate_covariance(c)
    try:
        nu = symplectic_eigenvalues(c)
    except DegeneracyError as exc:
        raise UnphysicalStateError(f"unphysical covariance: {exc}", key="covariance") from exc
    if nu[0] < 0.5 - tol:
        raise UnphysicalStateError(
            f"unphysical covariance: smallest symplectic eigenvalue {nu[0]:.3g} < 1/2", key="covariance"
        )
    return c


# ---------------------------------------------------------------------------
# two-mode invariants
# ---------------------------------------------------------------------------

class TwoModeInvariants(NamedTuple):
    I1: float
    I2: float
    I3: float
    I4: float
    I_delta: float


def _det2(m):
    return m[0][0] * m[1][1] - m[0][1] * m[1][0]


def _det4(m):
    # cofactor expansion along the first row; exact for Fraction entries
    total = Fraction(0)
    for j in range(4):
        if m[0][j] == 0:
            continue
        minor = [[m[r][k] for k in range(4) if k != j] for r in range(1, 4)]
        d3 = (
            minor[0][0] * (minor[1][1] * minor[2][2] - minor[1][2] * minor[2][1])
            - minor[0][1] * (minor[1][0] * minor[2][2] - minor[1][2] * minor[2][0])
            + minor[0][2] * (minor[1][0] * minor[2][1] - minor[1][1] * minor[2][0])
        )
        total += (-1) ** j * m[0][j] * d3
    return total


def _exact_invariants(c: np.ndarray):
    """``(I1, I2, I3, I4)`` as exact Fractions of the float entries of ``c``."""
    m = [[Fraction(float(v)) for v in row] for row in c]
    c1 = [row[0:2] for row in m[0:2]]
    c2 = [row[2:4] for row in m[2:4]]
    c3 = [row[2:4] for row in m[0:2]]
    return 4 * _det2(c1), 4 * _det2(c2), 4 * _det2(c3), 16 * _det4(m)


def _require_two_mode(c):
    c = validate_covariance(c)
    if c.shape != (4, 4):
        raise ValidationError(f"expected a two-mode (4x4) covariance, got {c.shape}", key="covariance")
    return c


def two_mode_invariants(c) -> TwoModeInvariants:
    """Local-symplectic invariants of a two-mode covariance (vacuum gives ``I1 = I2 = I4 = 1``)."""
    c = _require_two_mode(c)
    i1, i2, i3, i4 = _exact_invariants(c)
    return TwoModeInvariants(float(i1), float(i2), float(i3), float(i4), float(i1 + i2 + 2 * i3))


def _eigs_from_delta(i_delta, i4):
    """Scaled pair ``(lam_minus, lam_plus)`` from ``I_delta`` and ``I4``; inputs may be Fractions."""
    disc = i_delta * i_delta - 4 * i4
    if disc < 0:
        # float rounding of a degenerate pair
        if float(disc) < -1e-9 * max(1.0, float(i_delta) ** 2):
            raise UnphysicalStateError("negative discriminant in two-mode symplectic spectrum", key="covariance")
        disc = 0
    root = math.sqrt(float(disc))
    lam_plus_sq = (float(i_delta) + root) / 2.0
    if lam_plus_sq <= 0:
        raise UnphysicalStateError("non-positive symplectic eigenvalue", key="covariance")
    lam_minus_sq = float(i4) / lam_plus_sq
    if lam_minus_sq < 0:
        raise UnphysicalStateError("negative determinant", key="covariance")
    return math.sqrt(lam_minus_sq), math.sqrt(lam_plus_sq)


def symplectic_eigenvalues_two_mode(inv: TwoModeInvariants) -> tuple[float, float]:
    """``(lam_minus, lam_plus)`` from the invariants, scaled so the vacuum gives ``(1, 1)``."""
    lm, lp = _eigs_from_delta(inv.I_delta, inv.I4)
    if lm < 1.0 - PHYSICAL_TOL:
        raise UnphysicalStateError(f"smallest scaled symplectic eigenvalue {lm:.6g} < 1", key="covariance")
    return lm, lp


# ---------------------------------------------------------------------------
# entropy and discord
# ---------------------------------------------------------------------------

def entropy_f(x: float, base: float = 2.0) -> float:
    """Von Neumann entropy of a single-mode thermal state with scaled eigenvalue ``x``.

    ``f(x) = (x+1)/2 log((x+1)/2) - (x-1)/2 log((x-1)/2)``. Arguments within
    ``PHYSICAL_TOL`` below 1 are treated as 1.
    """
    x = float(x)
    if not x >= 1.0 - PHYSICAL_TOL:
        raise DomainError(f"entropy_f needs x >= 1, got {x!r}", key="x")
    if x <= 1.0:
        return 0.0
    hp = 0.5 * (x + 1.0)
    hm = 0.5 * (x - 1.0)
    return (hp * math.log(hp) - hm * math.log(hm)) / math.log(base)


def _swap_modes(c):
    perm = [2, 3, 0, 1]
    return c[np.ix_(perm, perm)]


def _conditional_w(i1, i2, i3, i4):
    """Optimal conditional determinant ``W`` of the Gaussian discord, from exact invariants."""
    if i1 <= 1:
        # pure measured mode: a physical state is then a product, B is untouched
        return float(i2)
    lhs = (i4 - i1 * i2) ** 2
    rhs = (1 + i1) * i3 * i3 * (i2 + i4)
    if lhs <= rhs:
        # W = ((|I3| + s) / (I1 - 1))**2 with s**2 = I3**2 + (I1 - 1)(I4 - I2)
        s_sq = i3 * i3 + (i1 - 1) * (i4 - i2)
        s = math.sqrt(max(float(s_sq), 0.0))
        return ((abs(float(i3)) + s) / float(i1 - 1)) ** 2
    p = i1 * i2 - i3 * i3 + i4
    q = i3**4 + (i4 - i1 * i2) ** 2 - 2 * i3 * i3 * (i4 + i1 * i2)
    root_q = math.sqrt(max(float(q), 0.0))
    # p - sqrt(q) rationalised: (p**2 - q) / (p + sqrt(q))
    return float(p * p - q) / (float(p) + root_q) / (2.0 * float(i1))


def gaussian_discord(c, measured_party: int = 0, base: float = 2.0) -> float:
    """Gaussian discord ``D(B|A)`` of a two-mode state, where mode ``measured_party`` is A.

    Exactly 0 for product states (``max|C3| < PRODUCT_TOL``); the first branch
    of the optimal-measurement formula is singular there.
    """
    c = require_physical(_require_two_mode(c))
    if measured_party not in (0, 1):
        raise ValidationError(f"measured_party must be 0 or 1, got {measured_party}", key="measured_party")
    if measured_party == 1:
        c = _swap_modes(c)
    if np.max(np.abs(c[0:2, 2:4])) < PRODUCT_TOL:
        return 0.0
    i1, i2, i3, i4 = _exact_invariants(c)
    lm, lp = _eigs_from_delta(i1 + i2 + 2 * i3, i4)
    w = _conditional_w(i1, i2, i3, i4)
    d = (
        entropy_f(math.sqrt(float(i1)), base)
        - entropy_f(lm, base)
        - entropy_f(lp, base)
        + entropy_f(math.sqrt(w), base)
    )
    return max(d, 0.0)


# ---------------------------------------------------------------------------
# partial transpose and negativity
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BipartitionSpec:
    """Two disjoint, non-empty lists of mode indices."""

    party_a: tuple[int, ...]
    party_b: tuple[int, ...]

    def __post_init__(self):
        a = tuple(int(m) for m in self.party_a)
        b = tuple(int(m) for m in self.party_b)
        object.__setattr__(self, "party_a", a)
        object.__setattr__(self, "party_b", b)
        if not a or not b:
            raise ValidationError("both parties of a bipartition must be non-empty", key="partition")
        if set(a) & set(b):
            raise ValidationError(f"parties overlap on modes {sorted(set(a) & set(b))}", key="partition")
        if len(set(a)) != len(a) or len(set(b)) != len(b):
            raise ValidationError("repeated mode index in bipartition", key="partition")

    @property
    def modes(self) -> tuple[int, ...]:
        return tuple(sorted(self.party_a + self.party_b))


def partial_transpose(c, transposed_modes: Sequence[int]) -> np.ndarray:
    """Flip the sign of the momentum quadrature of each listed mode: ``P C P``."""
    c = validate_covariance(c)
    n = n_modes_of(c)
    _check_modes(transposed_modes, n)
    signs = np.ones(2 * n)
    for m in transposed_modes:
        signs[2 * int(m) + 1] = -1.0
    return c * np.outer(signs, signs)


def _ln_term(scaled_eig, base):
    if scaled_eig >= 1.0 - NEGATIVITY_FLOOR:
        return 0.0
    return -math.log(scaled_eig) / math.log(base)


def log_negativity_two_mode(c, base: float = 2.0) -> float:
    """Logarithmic negativity of a two-mode state.

    Uses ``I~_delta = I1 + I2 - 2 I3`` and the scaled partially-transposed
    eigenvalue ``lam~ = 2 * nu~``; the result is ``max(0, -log(lam~))``.
    """
    c = require_physical(_require_two_mode(c))
    i1, i2, i3, i4 = _exact_invariants(c)
    lam_t, _ = _eigs_from_delta(i1 + i2 - 2 * i3, i4)
    return _ln_term(lam_t, base)


def reduce_modes(c, keep: Sequence[int]) -> np.ndarray:
    """Principal submatrix on the quadratures of ``keep`` (in the given order)."""
    c = validate_covariance(c)
    keep = [int(k) for k in keep]
    if not keep:
        raise ValidationError("keep must list at least one mode", key="keep")
    _check_modes(keep, n_modes_of(c))
    idx = _quadrature_indices(keep)
    return c[np.ix_(idx, idx)].copy()


def log_negativity_bipartition(c, partition: BipartitionSpec, base: float = 2.0) -> float:
    """Logarithmic negativity across ``partition``: sum over PT symplectic eigenvalues below 1/2.

    Modes not named by the partition are traced out first. For more than one
    mode per side this is only a lower bound on the entanglement.
    """
    c = require_physical(c)
    n = n_modes_of(c)
    _check_modes(partition.modes, n)
    if len(partition.modes) != n:
        order = list(partition.modes)
        c = reduce_modes(c, order)
        remap = {m: i for i, m in enumerate(order)}
        party_a = [remap[m] for m in partition.party_a]
    else:
        party_a = list(partition.party_a)
    nu = symplectic_eigenvalues(partial_transpose(c, party_a))
    return float(sum(_ln_term(2.0 * v, base) for v in nu))


# ---------------------------------------------------------------------------
# basis changes
# ---------------------------------------------------------------------------

def is_symplectic(s, tol: float = 1e-10) -> bool:
    s = np.asarray(s, dtype=float)
    if s.ndim != 2 or s.shape[0] != s.shape[1] or s.shape[0] % 2:
        return False
    om = symplectic_form(s.shape[0] // 2)
    return bool(np.max(np.abs(s @ om @ s.T - om)) <= tol)


def rotate_basis(c, s) -> np.ndarray:
    """``S C S^T`` for a symplectic ``S``."""
    c = validate_covariance(c)
    s = np.asarray(s, dtype=float)
    if s.shape != c.shape:
        raise ValidationError(f"S has shape {s.shape}, covariance has {c.shape}", key="S")
    if not is_symplectic(s):
        raise ValidationError("S is not symplectic (S Omega S^T != Omega)", key="S")
    out = s @ c @ s.T
    return 0.5 * (out + out.T)
