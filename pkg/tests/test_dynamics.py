import math

import numpy as np
import pytest
import scipy.linalg
from conftest import random_stable_system, seeds
from hypothesis import given
from hypothesis import strategies as st

from cvgn.dynamics import default_dt, evolve_covariance, lyapunov_operator, solve_steady
from cvgn.errors import IntegrationBlowupError, UnstableSystemError, ValidationError
from cvgn.gaussian import is_physical, vacuum
from cvgn.network import DriftDiffusion, SimplifiedParams, build_simplified


def exact_covariance(a, d, c0, t):
    """``C(t) = e^{At} (C0 - C_inf) e^{A^T t} + C_inf``."""
    c_inf = scipy.linalg.solve_continuous_lyapunov(a, -d)
    e = scipy.linalg.expm(a * t)
    return e @ (c0 - c_inf) @ e.T + c_inf


def test_lyapunov_operator_acts_on_row_major_vec():
    rng = np.random.default_rng(1)
    a, c = rng.normal(size=(4, 4)), rng.normal(size=(4, 4))
    assert np.allclose(lyapunov_operator(a) @ c.reshape(-1), (a @ c + c @ a.T).reshape(-1))


@given(seeds, st.integers(1, 4))
def test_steady_matches_scipy(seed, n):
    a, d = random_stable_system(np.random.default_rng(seed), n)
    c = solve_steady(DriftDiffusion(a, d))
    ref = scipy.linalg.solve_continuous_lyapunov(a, -d)
    assert np.allclose(c, ref, rtol=1e-9, atol=1e-12)
    assert np.array_equal(c, c.T)


def test_unstable_drift_rejected():
    with pytest.raises(UnstableSystemError):
        solve_steady(DriftDiffusion(np.diag([1.0, -1.0]), np.eye(2)))
    with pytest.raises(UnstableSystemError):
        solve_steady(DriftDiffusion(np.zeros((2, 2)), np.eye(2)))


def test_rk4_is_fourth_order():
    a, d = random_stable_system(np.random.default_rng(5), 2)
    c0 = vacuum(2)
    t = 1.0
    exact = exact_covariance(a, d, c0, t)
    errs = []
    for dt in (0.04, 0.02):
        c = evolve_covariance(DriftDiffusion(a, d), c0, t, dt, check_physical=False).states[-1]
        errs.append(np.max(np.abs(c - exact)))
    assert math.log2(errs[0] / errs[1]) >= 3.5


@given(seeds, st.integers(1, 3))
def test_transient_matches_matrix_exponential(seed, n):
    a, d = random_stable_system(np.random.default_rng(seed), n)
    dd = DriftDiffusion(a, d)
    traj = evolve_covariance(dd, vacuum(n), 2.0, sample_every=10**9)
    assert np.allclose(traj.states[-1], exact_covariance(a, d, vacuum(n), 2.0), rtol=1e-7, atol=1e-9)


def test_thermalisation_closed_form():
    # eta = 0: each cavity relaxes independently, n(t) = n_ss (1 - exp(-2 kappa t))
    dd = build_simplified(SimplifiedParams(kappa=1.0, eta=0.0, n_in=2.0))
    traj = evolve_covariance(dd, vacuum(2), 3.0, 0.001, sample_every=100)
    n_t = traj.states[:, 0, 0] - 0.5
    assert np.allclose(n_t, 1.0 * (1 - np.exp(-2 * traj.times)), atol=1e-12)


def test_sampling_and_final_time():
    dd = build_simplified(SimplifiedParams(kappa=1.0, eta=0.3, n_in=1.0))
    traj = evolve_covariance(dd, vacuum(2), 1.05, 0.1, sample_every=4)
    assert traj.times[0] == 0.0 and traj.times[-1] == 1.05
    assert np.allclose(traj.times, [0.0, 0.4, 0.8, 1.05])
    assert len(traj) == len(traj.states)


def test_zero_horizon():
    dd = build_simplified(SimplifiedParams())
    traj = evolve_covariance(dd, vacuum(2), 0.0)
    assert len(traj) == 1 and np.array_equal(traj.states[0], vacuum(2))


@pytest.mark.parametrize("kwargs", [{"dt": 0.0}, {"dt": -1.0}, {"sample_every": 0}, {"t_final": -1.0}])
def test_evolve_validation(kwargs):
    dd = build_simplified(SimplifiedParams(kappa=1.0))
    args = {"t_final": 1.0, "dt": 0.01, **kwargs}
    with pytest.raises(ValidationError):
        evolve_covariance(dd, vacuum(2), **args)


def test_wrong_initial_shape():
    with pytest.raises(ValidationError):
        evolve_covariance(build_simplified(SimplifiedParams()), vacuum(3), 1.0)


def test_oversized_step_detected():
    dd = build_simplified(SimplifiedParams(kappa=1.0, eta=0.5, n_in=1.0))
    with pytest.raises(IntegrationBlowupError):
        evolve_covariance(dd, vacuum(2), 200.0, dt=5.0)


def test_default_dt_resolves_fastest_rate():
    dd = build_simplified(SimplifiedParams(kappa=2.0, eta=0.25))
    assert default_dt(dd) == pytest.approx(0.01 / 3.0)


@given(seeds, st.integers(1, 3))
def test_trajectories_stay_physical(seed, n):
    a, d = random_stable_system(np.random.default_rng(seed), n)
    traj = evolve_covariance(DriftDiffusion(a, d), vacuum(n), 3.0, sample_every=25)
    assert all(is_physical(c) for c in traj.states)
