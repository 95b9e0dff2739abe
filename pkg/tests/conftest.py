import numpy as np
import pytest

from steadygain import (
    LinearGaussianModel,
    build_bicycle_model,
    solve_dare,
)


@pytest.fixture(scope="session")
def bicycle():
    return build_bicycle_model()


@pytest.fixture(scope="session")
def bicycle_dare(bicycle):
    return solve_dare(bicycle, tol=1e-12)


def scalar_model(a=0.5, c=1.0, q=1.0, r=1.0):
    """One-dimensional test plant with E = I, so E Q E^T = Q."""
    return LinearGaussianModel(
        A=[[a]], B=[[0.0]], C=[[c]], D=[[0.0]], E=[[1.0]],
        Q=[[q]], R=[[r]], dt=0.01)


def random_system(rng, n=None, r=None, p=None, rho=0.9):
    """Random stable plant with PSD Q and PD R for equivalence tests."""
    n = n or int(rng.integers(1, 5))
    r = r or int(rng.integers(1, 4))
    p = p or int(rng.integers(1, 4))
    A = rng.standard_normal((n, n))
    radius = np.abs(np.linalg.eigvals(A)).max()
    if radius > 0:
        A *= rho * rng.uniform(0.3, 1.0) / radius
    C = rng.standard_normal((r, n))
    E = rng.standard_normal((n, p))
    fq = rng.standard_normal((p, p))
    Q = fq @ fq.T
    fr = rng.standard_normal((r, r))
    R = fr @ fr.T + (0.3 + r) * np.eye(r)
    return LinearGaussianModel(
        A=A, B=np.zeros((n, 1)), C=C, D=np.zeros((r, 1)), E=E,
        Q=Q, R=R, dt=0.01)


def random_psd(rng, n, scale=1.0):
    f = rng.standard_normal((n, n))
    return scale * (f @ f.T) / n
