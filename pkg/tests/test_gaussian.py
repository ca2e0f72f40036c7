import math

import numpy as np
import pytest
import scipy.linalg
from conftest import random_state, random_symplectic, seeds
from hypothesis import given
from hypothesis import strategies as st

from cvgn.errors import DomainError, NumericalError, UnphysicalStateError, ValidationError
from cvgn.gaussian import (
    BipartitionSpec,
    direct_sum,
    entropy_f,
    gaussian_discord,
    is_physical,
    is_symplectic,
    log_negativity_bipartition,
    log_negativity_two_mode,
    partial_transpose,
    phase_rotation,
    plus_minus_rotation,
    reduce_modes,
    rotate_basis,
    symplectic_eigenvalues,
    symplectic_form,
    thermal,
    two_mode_invariants,
    two_mode_squeezed_vacuum,
    vacuum,
    _conditional_w,
    _exact_invariants,
)

LOG2E = 1.0 / math.log(2.0)


# -- oracles ----------------------------------------------------------------

def nu_hermitian(c):
    """Symplectic eigenvalues as the positive spectrum of ``C^1/2 (i Omega) C^1/2``."""
    root = scipy.linalg.sqrtm(c).real
    h = root @ (1j * symplectic_form(len(c) // 2)) @ root
    ev = np.linalg.eigvalsh(0.5 * (h + h.conj().T))
    return np.sort(ev[ev > 0])


def _f(x):
    return entropy_f(max(x, 1.0))


def _conditional_dets(c, theta, log_s):
    """``det`` of mode 1's conditional covariance after measuring mode 0 with
    the pure state ``R(theta) diag(s, 1/s) R^T / 2``; vectorised over the grid."""
    a, b, x = c[:2, :2], c[2:, 2:], c[:2, 2:]
    s = np.exp(log_s)
    co, si = np.cos(theta), np.sin(theta)
    m00 = a[0, 0] + (co * co * s + si * si / s) / 2
    m11 = a[1, 1] + (si * si * s + co * co / s) / 2
    m01 = a[0, 1] + co * si * (s - 1 / s) / 2
    det_m = m00 * m11 - m01 * m01
    i00, i11, i01 = m11 / det_m, m00 / det_m, -m01 / det_m

    def xmx(i, j):
        return x[0, i] * (i00 * x[0, j] + i01 * x[1, j]) + x[1, i] * (i01 * x[0, j] + i11 * x[1, j])

    c00, c11, c01 = b[0, 0] - xmx(0, 0), b[1, 1] - xmx(1, 1), b[0, 1] - xmx(0, 1)
    return c00 * c11 - c01 * c01


def _homodyne_dets(c, theta):
    a, b, x = c[:2, :2], c[2:, 2:], c[:2, 2:]
    u = np.stack([np.cos(theta), np.sin(theta)])
    xu = x.T @ u
    return (b[0, 0] - xu[0] ** 2 / np.einsum("in,ij,jn->n", u, a, u)) * (
        b[1, 1] - xu[1] ** 2 / np.einsum("in,ij,jn->n", u, a, u)
    ) - (b[0, 1] - xu[0] * xu[1] / np.einsum("in,ij,jn->n", u, a, u)) ** 2


def discord_oracle(c):
    """Grid-and-zoom minimum over pure one-mode Gaussian measurements on mode 0.

    Squeezing is bounded (``|log s| <= 12``) to keep the float algebra exact
    enough; the homodyne limit is searched separately along its own line.
    """
    t0, l0, span_t, span_l = math.pi / 2, 0.0, math.pi / 2, 12.0
    best = math.inf
    for _ in range(12):
        th = np.linspace(t0 - span_t, t0 + span_t, 201)
        ls = np.clip(np.linspace(l0 - span_l, l0 + span_l, 201), -12, 12)
        grid = _conditional_dets(c, th[:, None], ls[None, :])
        k = np.unravel_index(np.argmin(grid), grid.shape)
        best = min(best, grid[k])
        t0, l0 = th[k[0]], ls[k[1]]
        span_t, span_l = span_t / 20, span_l / 20
    t0, span = math.pi / 2, math.pi / 2
    for _ in range(12):
        th = np.linspace(t0 - span, t0 + span, 2001)
        dets = _homodyne_dets(c, th)
        k = int(np.argmin(dets))
        best = min(best, dets[k])
        t0, span = th[k], span / 200
    nus = nu_hermitian(c)
    return _f(2 * math.sqrt(np.linalg.det(c[:2, :2]))) - sum(_f(2 * n) for n in nus) + _f(2 * math.sqrt(best))


# -- construction and validation ---------------------------------------------

def test_vacuum_and_thermal_eigenvalues():
    assert np.allclose(symplectic_eigenvalues(vacuum(3)), 0.5)
    assert np.allclose(symplectic_eigenvalues(thermal([0.0, 1.5, 4.0])), [0.5, 2.0, 4.5])


def test_rejects_malformed_matrices():
    with pytest.raises(ValidationError):
        symplectic_eigenvalues(np.eye(3))
    with pytest.raises(ValidationError):
        symplectic_eigenvalues(np.array([[1.0, 0.2], [0.0, 1.0]]))
    with pytest.raises(ValidationError):
        symplectic_eigenvalues(np.full((2, 2), np.nan))


def test_unphysical_state_detected():
    assert not is_physical(0.4 * np.eye(2))
    with pytest.raises(UnphysicalStateError):
        gaussian_discord(0.4 * np.eye(4))
    with pytest.raises(UnphysicalStateError):
        log_negativity_two_mode(0.4 * np.eye(4))


@given(seeds, st.integers(1, 4))
def test_symplectic_eigenvalues_match_hermitian_route(seed, n):
    c = random_state(np.random.default_rng(seed), n)
    assert np.allclose(symplectic_eigenvalues(c), nu_hermitian(c), rtol=1e-8)


@given(seeds, st.integers(1, 4))
def test_random_states_are_physical(seed, n):
    assert is_physical(random_state(np.random.default_rng(seed), n))


def test_plus_minus_rotation_is_symplectic_involution():
    s = plus_minus_rotation(4, [(0, 2), (1, 3)])
    assert is_symplectic(s)
    assert np.allclose(s @ s, np.eye(8))


def test_rotate_basis_rejects_non_symplectic():
    with pytest.raises(ValidationError):
        rotate_basis(vacuum(1), np.diag([2.0, 2.0]))


# -- invariants ----------------------------------------------------------------

def test_invariants_of_vacuum_are_one():
    inv = two_mode_invariants(vacuum(2))
    assert inv.I1 == inv.I2 == inv.I4 == pytest.approx(1.0)
    assert inv.I3 == 0.0
    assert inv.I_delta == pytest.approx(2.0)


@given(seeds)
def test_exact_invariants_agree_with_float_determinants(seed):
    c = random_state(np.random.default_rng(seed), 2)
    inv = two_mode_invariants(c)
    assert inv.I1 == pytest.approx(4 * np.linalg.det(c[:2, :2]), rel=1e-10)
    assert inv.I3 == pytest.approx(4 * np.linalg.det(c[:2, 2:]), rel=1e-9, abs=1e-12)
    assert inv.I4 == pytest.approx(16 * np.linalg.det(c), rel=1e-9)


# -- entropy -------------------------------------------------------------------

def test_entropy_reference_values():
    # 40-digit evaluations
    assert entropy_f(math.cosh(1.0)) == pytest.approx(0.95138951389127862569, abs=1e-14)
    assert entropy_f(3.0, base=math.e) == pytest.approx(1.3862943611198906188, abs=1e-14)
    assert entropy_f(1.0) == 0.0


def test_entropy_domain():
    assert entropy_f(1.0 - 1e-10) == 0.0
    with pytest.raises(DomainError):
        entropy_f(0.9)


# -- discord -------------------------------------------------------------------

@pytest.mark.parametrize("r", [0.1, 0.35, 0.8, 1.0])
def test_discord_of_pure_squeezed_state(r):
    assert gaussian_discord(two_mode_squeezed_vacuum(r)) == pytest.approx(entropy_f(math.cosh(2 * r)), abs=1e-10)


def test_discord_of_product_is_zero():
    assert gaussian_discord(thermal([1.0, 3.0])) == 0.0
    assert gaussian_discord(vacuum(2)) == 0.0


def test_discord_log_base():
    c = two_mode_squeezed_vacuum(0.4)
    assert gaussian_discord(c, base=math.e) == pytest.approx(gaussian_discord(c) * math.log(2), rel=1e-12)


@pytest.mark.parametrize("seed", range(12))
def test_discord_matches_brute_force_minimisation(seed):
    c = random_state(np.random.default_rng(seed), 2, max_excess=1.0)
    assert gaussian_discord(c) == pytest.approx(discord_oracle(c), abs=1e-6)
    swapped = c[np.ix_([2, 3, 0, 1], [2, 3, 0, 1])]
    assert gaussian_discord(c, measured_party=1) == pytest.approx(discord_oracle(swapped), abs=1e-6)


@given(seeds)
def test_discord_nonnegative_finite(seed):
    d = gaussian_discord(random_state(np.random.default_rng(seed), 2))
    assert math.isfinite(d) and d >= 0


@given(seeds)
def test_discord_and_negativity_invariant_under_local_symplectics(seed):
    rng = np.random.default_rng(seed)
    c = random_state(rng, 2)
    s = direct_sum(random_symplectic(rng, 1), random_symplectic(rng, 1))
    moved = rotate_basis(c, s)
    assert gaussian_discord(moved) == pytest.approx(gaussian_discord(c), abs=1e-8)
    assert log_negativity_two_mode(moved) == pytest.approx(log_negativity_two_mode(c), abs=1e-9)


def _branch(c):
    i1, i2, i3, i4 = _exact_invariants(c)
    return (i4 - i1 * i2) ** 2 <= (1 + i1) * i3 * i3 * (i2 + i4)


def _switching_pairs(count, max_tries=500):
    rng = np.random.default_rng(7)
    pairs = []
    for _ in range(max_tries):
        c0 = random_state(rng, 2, max_excess=3.0, scale=0.6)
        c1 = random_state(rng, 2, max_excess=3.0, scale=0.6)
        if _branch(c0) != _branch(c1):
            pairs.append((c0, c1))
            if len(pairs) == count:
                break
    return pairs


@pytest.mark.parametrize("pair", _switching_pairs(10), ids=lambda _: "pair")
def test_discord_continuous_across_branch_switch(pair):
    c0, c1 = pair
    path = lambda t: (1 - t) * c0 + t * c1  # noqa: E731  (convex mixtures stay physical)
    lo, hi = 0.0, 1.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if _branch(path(mid)) == _branch(c0):
            lo = mid
        else:
            hi = mid
    assert _branch(path(lo)) != _branch(path(hi))
    assert gaussian_discord(path(lo)) == pytest.approx(gaussian_discord(path(hi)), abs=1e-7)


def test_conditional_w_pure_measured_mode():
    assert _conditional_w(1, 3, 0, 3) == 3.0


# -- negativity ------------------------------------------------------------------

@pytest.mark.parametrize("r", [0.1, 0.5, 1.0])
def test_negativity_of_pure_squeezed_state(r):
    assert log_negativity_two_mode(two_mode_squeezed_vacuum(r)) == pytest.approx(2 * r * LOG2E, abs=1e-10)


def test_partial_transpose_is_involution():
    c = two_mode_squeezed_vacuum(0.7)
    assert np.array_equal(partial_transpose(partial_transpose(c, [1]), [1]), c)


def test_negativity_two_mode_agrees_with_bipartition_route():
    c = random_state(np.random.default_rng(3), 2)
    assert log_negativity_two_mode(c) == pytest.approx(
        log_negativity_bipartition(c, BipartitionSpec((0,), (1,))), abs=1e-10
    )


def test_negativity_is_additive_over_independent_pairs():
    c = direct_sum(two_mode_squeezed_vacuum(0.3), two_mode_squeezed_vacuum(0.6))
    spec = BipartitionSpec((0, 2), (1, 3))
    assert log_negativity_bipartition(c, spec) == pytest.approx(2 * 0.9 * LOG2E, abs=1e-10)
    # the (0, 1) pair alone, with modes 2 and 3 traced out
    assert log_negativity_bipartition(c, BipartitionSpec((0,), (1,))) == pytest.approx(0.6 * LOG2E, abs=1e-10)


def test_reduce_modes_selects_blocks():
    c = direct_sum(thermal([1.0]), two_mode_squeezed_vacuum(0.2))
    assert np.array_equal(reduce_modes(c, [1, 2]), two_mode_squeezed_vacuum(0.2))


@pytest.mark.parametrize("a,b", [((0,), (0,)), ((), (1,)), ((0,), (5,))])
def test_bipartition_validation(a, b):
    with pytest.raises(ValidationError):
        log_negativity_bipartition(vacuum(3), BipartitionSpec(a, b))


@given(seeds)
def test_negativity_nonnegative_and_phase_invariant(seed):
    rng = np.random.default_rng(seed)
    c = random_state(rng, 3)
    spec = BipartitionSpec((0,), (1, 2))
    ln = log_negativity_bipartition(c, spec)
    assert ln >= 0
    rotated = rotate_basis(c, phase_rotation(rng.uniform(0, 2 * np.pi, 3)))
    assert log_negativity_bipartition(rotated, spec) == pytest.approx(ln, abs=1e-9)


def test_pairing_failure_is_numerical_error():
    # indefinite matrix: eigenvalues of Omega C are not +-i nu pairs
    with pytest.raises((NumericalError, UnphysicalStateError)):
        log_negativity_two_mode(np.diag([1.0, -1.0, 1.0, 1.0]))
