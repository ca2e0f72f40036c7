import os

import numpy as np
import pytest
import scipy.linalg
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from cvgn.gaussian import symplectic_form

settings.register_profile("default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", max_examples=25, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("thorough", max_examples=500, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


def random_symplectic(rng, n_modes, scale=0.4):
    """``expm(Omega H)`` with random symmetric ``H`` is symplectic."""
    h = rng.normal(scale=scale, size=(2 * n_modes, 2 * n_modes))
    h = 0.5 * (h + h.T)
    return scipy.linalg.expm(symplectic_form(n_modes) @ h)


def random_state(rng, n_modes, max_excess=2.0, scale=0.4):
    """Williamson form ``S diag(nu, nu) S^T`` with random ``nu >= 1/2``."""
    nu = 0.5 + rng.uniform(0, max_excess, size=n_modes)
    s = random_symplectic(rng, n_modes, scale)
    c = s @ np.diag(np.repeat(nu, 2)) @ s.T
    return 0.5 * (c + c.T)


def random_stable_system(rng, n_modes):
    """Random ``(A, D)`` with Hurwitz ``A`` and ``D`` big enough to keep states physical.

    ``D + i(A Omega + Omega A^T)/2 >= 0`` is the condition for the evolution to
    preserve physicality; padding ``D`` with the norm of the commutator term
    guarantees it.
    """
    k = 2 * n_modes
    b = rng.normal(scale=0.5, size=(k, k))
    skew = rng.normal(scale=1.0, size=(k, k))
    a = -rng.uniform(0.3, 1.0) * np.eye(k) - 0.5 * b @ b.T + 0.5 * (skew - skew.T)
    om = symplectic_form(n_modes)
    comm = a @ om + om @ a.T
    p = rng.normal(scale=0.5, size=(k, k))
    d = 0.5 * np.linalg.norm(comm, 2) * np.eye(k) + p @ p.T
    return a, 0.5 * (d + d.T)


seeds = st.integers(min_value=0, max_value=2**32 - 1)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
