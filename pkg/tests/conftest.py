import numpy as np
import pytest

from lpvar.model import LagPolynomial, LocalModel


def random_model(rng, k=None, p=None, radius=None, misspec_len=0, recursive=True):
    """Random stable local-to-SVAR with a unit lower-triangular impact matrix."""
    k = int(rng.integers(1, 4)) if k is None else k
    p = int(rng.integers(1, 3)) if p is None else p
    radius = rng.uniform(0.3, 0.9) if radius is None else radius
    A = rng.normal(size=(p, k, k))
    comp = np.zeros((k * p, k * p))
    comp[:k] = np.hstack(list(A))
    if p > 1:
        comp[k:, :-k] = np.eye(k * (p - 1))
    rho = np.max(np.abs(np.linalg.eigvals(comp)))
    # scaling lag l by c^l scales every companion eigenvalue by c
    c = radius / rho
    A = np.stack([A[l] * c ** (l + 1) for l in range(p)])
    H = np.eye(k)
    if recursive:
        H += np.tril(rng.normal(scale=0.5, size=(k, k)), -1)
    d = rng.uniform(0.5, 2.0, size=k)
    alpha = None
    if misspec_len:
        alpha = LagPolynomial(rng.normal(scale=0.3, size=(misspec_len, k, k)), k)
    return LocalModel(A, H, d, alpha)


def random_proxy_model(rng, k=3, p=1):
    """Proxy first, noise shock last, proxy loads only on shock 1 and the noise."""
    m = k + 1
    A = rng.normal(scale=0.3, size=(p, k, k))
    A[:, 1:, 0] = 0.0
    A[:, 0, 0] = rng.uniform(-0.5, 0.5, size=p)
    H = np.zeros((k, m))
    H[0, 0] = 1.0
    H[0, -1] = 1.0
    H[1:, :k] = np.tril(rng.normal(scale=0.5, size=(k - 1, k)))
    H[1:, 1:k] += np.eye(k - 1)
    d = rng.uniform(0.5, 2.0, size=m)
    alpha = rng.normal(scale=0.3, size=(2, m, m))
    alpha[:, :, -1] = 0.0
    comp = np.zeros((k * p, k * p))
    comp[:k] = np.hstack(list(A))
    if p > 1:
        comp[k:, :-k] = np.eye(k * (p - 1))
    rad = np.max(np.abs(np.linalg.eigvals(comp)))
    if rad >= 0.9:
        # scaling lag l by c^l scales every companion eigenvalue by c
        A = np.stack([A[l] * (0.8 / rad) ** (l + 1) for l in range(p)])
    return LocalModel(A, H, d, LagPolynomial(alpha, m))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def bivariate():
    return LocalModel([[[0.5, 0.1], [0.2, 0.3]]], [[1.0, 0.0], [0.4, 1.0]], [1.0, 2.0])
