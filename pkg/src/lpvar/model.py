"""Local-to-SVAR data generating processes and their population quantities.

A local-to-SVAR(p) model is

    y_t = c + sum_l A_l y_{t-l} + H [I + T^{-zeta} alpha(L)] eps_t,

with eps_t ~ iid (0, D), D diagonal.  All indices in this package are
0-based: response ``i`` and shock ``j`` refer to rows/columns of H.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.linalg

from .errors import ModelError

# Kronecker-product Lyapunov solve is exact but O(n^6); switch above this size.
_KRON_MAX_DIM = 20


def _frozen(a, dtype=float) -> np.ndarray:
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class LagPolynomial:
    """Finite MA polynomial alpha(L) = sum_{l=1}^{L} alpha_l L^l.

    ``coeffs[k]`` holds alpha_{k+1}; an empty stack encodes alpha(L) = 0.
    """

    coeffs: np.ndarray
    m: int

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=float)
        if c.size == 0:
            c = np.zeros((0, self.m, self.m))
        if c.ndim != 3 or c.shape[1:] != (self.m, self.m):
            raise ModelError(
                f"misspec coefficients must be {self.m}x{self.m} matrices, got shape {c.shape}"
            )
        if not np.all(np.isfinite(c)):
            raise ModelError("misspec coefficients must be finite")
        object.__setattr__(self, "coeffs", _frozen(c))

    @classmethod
    def zero(cls, m: int) -> "LagPolynomial":
        return cls(np.zeros((0, m, m)), m)

    @property
    def length(self) -> int:
        return self.coeffs.shape[0]

    def __getitem__(self, lag: int) -> np.ndarray:
        """alpha_lag for lag >= 1 (zero beyond the truncation)."""
        if lag < 1:
            raise IndexError("lags start at 1")
        if lag > self.length:
            return np.zeros((self.m, self.m))
        return self.coeffs[lag - 1]

    def padded(self, length: int) -> "LagPolynomial":
        if length < self.length:
            raise ValueError("cannot pad to a shorter length")
        extra = np.zeros((length - self.length, self.m, self.m))
        return LagPolynomial(np.concatenate([self.coeffs, extra]), self.m)

    def scaled(self, factor: float) -> "LagPolynomial":
        return LagPolynomial(factor * self.coeffs, self.m)

    def __add__(self, other: "LagPolynomial") -> "LagPolynomial":
        L = max(self.length, other.length)
        return LagPolynomial(self.padded(L).coeffs + other.padded(L).coeffs, self.m)


@dataclass(frozen=True)
class IrfTarget:
    """Response of variable ``response`` to shock ``shock`` at ``horizon``."""

    response: int
    shock: int
    horizon: int

    def __post_init__(self):
        if self.response < 0 or self.shock < 0 or self.horizon < 0:
            raise ModelError(f"target indices must be non-negative: {self}")

    def at(self, horizon: int) -> "IrfTarget":
        return IrfTarget(self.response, self.shock, horizon)


@dataclass(frozen=True)
class LocalModel:
    """Structural local-to-SVAR(p) model in levels."""

    lag_matrices: np.ndarray
    impact: np.ndarray
    shock_vars: np.ndarray
    misspec: LagPolynomial | None = None
    zeta: float = 0.5
    intercept: np.ndarray | None = None

    def __post_init__(self):
        A = np.asarray(self.lag_matrices, dtype=float)
        H = np.asarray(self.impact, dtype=float)
        if H.ndim == 1:
            H = H.reshape(-1, 1)
        if H.ndim != 2:
            raise ModelError(f"impact must be a 2-d matrix, got shape {H.shape}")
        n_obs, m = H.shape
        if A.ndim == 2 and A.shape == (n_obs, n_obs):
            A = A[None]
        if A.ndim != 3 or A.shape[0] < 1 or A.shape[1:] != (n_obs, n_obs):
            raise ModelError(
                f"lag_matrices must be a non-empty stack of {n_obs}x{n_obs} matrices "
                f"matching impact ({n_obs}x{m}), got shape {A.shape}"
            )
        d = np.asarray(self.shock_vars, dtype=float).reshape(-1)
        if d.shape != (m,):
            raise ModelError(f"shock_vars must have {m} entries (columns of impact), got {d.size}")
        if not np.all(d > 0):
            raise ModelError(f"shock_vars must be strictly positive, got {d.tolist()}")
        alpha = self.misspec if self.misspec is not None else LagPolynomial.zero(m)
        if alpha.m != m:
            raise ModelError(f"misspec is {alpha.m}x{alpha.m} but the model has {m} shocks")
        if not self.zeta > 0:
            raise ModelError(f"zeta must be positive, got {self.zeta}")
        c = np.zeros(n_obs) if self.intercept is None else np.asarray(self.intercept, float).reshape(-1)
        if c.shape != (n_obs,):
            raise ModelError(f"intercept must have {n_obs} entries, got {c.size}")
        for name, arr in (("lag_matrices", A), ("impact", H), ("intercept", c)):
            if not np.all(np.isfinite(arr)):
                raise ModelError(f"{name} contains non-finite values")
        object.__setattr__(self, "lag_matrices", _frozen(A))
        object.__setattr__(self, "impact", _frozen(H))
        object.__setattr__(self, "shock_vars", _frozen(d))
        object.__setattr__(self, "misspec", alpha)
        object.__setattr__(self, "zeta", float(self.zeta))
        object.__setattr__(self, "intercept", _frozen(c))
        rho = spectral_radius(build_companion(self).A)
        if not rho < 1:
            raise ModelError(f"model is not stationary: spectral radius of companion matrix is {rho:.6g}")

    @property
    def obs_dim(self) -> int:
        return self.impact.shape[0]

    @property
    def n_shocks(self) -> int:
        return self.impact.shape[1]

    @property
    def lags(self) -> int:
        return self.lag_matrices.shape[0]

    def with_misspec(self, alpha: LagPolynomial) -> "LocalModel":
        return LocalModel(self.lag_matrices, self.impact, self.shock_vars, alpha, self.zeta, self.intercept)

    def padded(self, lags: int) -> "LocalModel":
        """Same DGP written with ``lags`` lag matrices (extra ones zero)."""
        if lags < self.lags:
            raise ModelError("cannot pad to fewer lags")
        n = self.obs_dim
        A = np.concatenate([self.lag_matrices, np.zeros((lags - self.lags, n, n))])
        return LocalModel(A, self.impact, self.shock_vars, self.misspec, self.zeta, self.intercept)

    @classmethod
    def ar1(cls, rho: float, sigma2: float = 1.0, misspec=None, zeta: float = 0.5) -> "LocalModel":
        """Univariate local-to-AR(1) convenience constructor."""
        alpha = None
        if misspec is not None:
            alpha = misspec if isinstance(misspec, LagPolynomial) else LagPolynomial(
                np.asarray(misspec, float).reshape(-1, 1, 1), 1)
        return cls([[[rho]]], [[1.0]], [sigma2], alpha, zeta)


@dataclass(frozen=True)
class CompanionModel:
    """First-order (companion) representation y_t = A y_{t-1} + H[...]eps_t."""

    A: np.ndarray
    H: np.ndarray
    shock_vars: np.ndarray
    misspec: LagPolynomial = field(default=None)
    zeta: float = 0.5
    obs_dim: int | None = None
    lags: int = 1

    def __post_init__(self):
        A = np.asarray(self.A, dtype=float)
        H = np.asarray(self.H, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ModelError(f"A must be square, got shape {A.shape}")
        if H.ndim != 2 or H.shape[0] != A.shape[0]:
            raise ModelError(f"H must have {A.shape[0]} rows, got shape {H.shape}")
        d = np.asarray(self.shock_vars, dtype=float).reshape(-1)
        if d.shape != (H.shape[1],) or not np.all(d > 0):
            raise ModelError("shock_vars must be positive with one entry per column of H")
        alpha = self.misspec if self.misspec is not None else LagPolynomial.zero(H.shape[1])
        object.__setattr__(self, "A", _frozen(A))
        object.__setattr__(self, "H", _frozen(H))
        object.__setattr__(self, "shock_vars", _frozen(d))
        object.__setattr__(self, "misspec", alpha)
        object.__setattr__(self, "obs_dim", A.shape[0] if self.obs_dim is None else int(self.obs_dim))

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.H.shape[1]

    @property
    def D(self) -> np.ndarray:
        return np.diag(self.shock_vars)

    @property
    def Sigma(self) -> np.ndarray:
        return (self.H * self.shock_vars) @ self.H.T

    def powers(self, kmax: int) -> np.ndarray:
        """Stack of A^0, ..., A^kmax."""
        out = np.empty((kmax + 1, self.n, self.n))
        out[0] = np.eye(self.n)
        for k in range(1, kmax + 1):
            out[k] = out[k - 1] @ self.A
        return out

    def check_target(self, target: IrfTarget) -> None:
        """Index bounds plus the recursive unit-effect normalization for the shock."""
        if target.response >= self.n:
            raise ModelError(f"response index {target.response} out of range for n={self.n}")
        if target.shock >= self.m or target.shock >= self.n:
            raise ModelError(f"shock index {target.shock} out of range (n={self.n}, m={self.m})")
        check_normalization(self.H, target.shock)


def check_normalization(H: np.ndarray, shock: int, tol: float = 1e-12) -> None:
    """Raise unless the first ``shock+1`` rows of H are (lower-unit-triangular, 0)."""
    top = np.asarray(H)[: shock + 1]
    lead = top[:, : shock + 1]
    bad = []
    if not np.allclose(np.diag(lead), 1.0, rtol=0, atol=tol):
        bad.append("diagonal entries are not 1")
    if np.any(np.abs(np.triu(lead, 1)) > tol):
        bad.append("leading block is not lower triangular")
    if np.any(np.abs(top[:, shock + 1:]) > tol):
        bad.append("columns after the shock are not zero")
    if bad:
        raise ModelError(
            f"impact matrix violates the recursive normalization for shock {shock}: " + "; ".join(bad)
        )


def build_companion(model: LocalModel) -> CompanionModel:
    n_obs, p = model.obs_dim, model.lags
    n = n_obs * p
    A = np.zeros((n, n))
    A[:n_obs] = np.hstack(list(model.lag_matrices))
    if p > 1:
        A[n_obs:, : n - n_obs] = np.eye(n - n_obs)
    H = np.zeros((n, model.n_shocks))
    H[:n_obs] = model.impact
    return CompanionModel(A, H, model.shock_vars, model.misspec, model.zeta, n_obs, p)


def extract_structural(cm: CompanionModel) -> tuple[np.ndarray, np.ndarray]:
    """Inverse of :func:`build_companion`: (lag matrices, impact)."""
    k, p = cm.obs_dim, cm.lags
    lag_mats = np.stack([cm.A[:k, l * k:(l + 1) * k] for l in range(p)])
    return lag_mats, np.array(cm.H[:k])


def spectral_radius(A) -> float:
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if A.size == 0:
        return 0.0
    return float(np.max(np.abs(np.linalg.eigvals(A))))


def stationary_variance(cm: CompanionModel) -> np.ndarray:
    """Var of the stationary solution with alpha = 0: S = A S A' + H D H'."""
    rho = spectral_radius(cm.A)
    if not rho < 1:
        raise ModelError(f"A is not stable: eigenvalue modulus {rho:.6g} >= 1")
    A, Sigma, n = cm.A, cm.Sigma, cm.n
    if n <= _KRON_MAX_DIM:
        # vec(S) = (I - A kron A)^{-1} vec(Sigma); row-major vec is consistent for A S A'
        S = np.linalg.solve(np.eye(n * n) - np.kron(A, A), Sigma.reshape(-1)).reshape(n, n)
    else:
        S = scipy.linalg.solve_discrete_lyapunov(A, Sigma)
    return 0.5 * (S + S.T)


def true_irf(cm: CompanionModel, target: IrfTarget, T: float) -> float:
    """theta_{h,T} = e_i'(A^h H + T^{-zeta} sum_{l<=h} A^{h-l} H alpha_l) e_j."""
    if target.response >= cm.n or target.shock >= cm.m:
        raise ModelError(f"target {target} out of range (n={cm.n}, m={cm.m})")
    h, i, j = target.horizon, target.response, target.shock
    P = cm.powers(h)
    theta = P[h][i] @ cm.H[:, j]
    scale = float(T) ** (-cm.zeta)
    for lag in range(1, min(h, cm.misspec.length) + 1):
        theta += scale * (P[h - lag][i] @ cm.H) @ cm.misspec[lag][:, j]
    return float(theta)


def true_irf_path(cm: CompanionModel, response: int, shock: int, horizons, T: float) -> np.ndarray:
    return np.array([true_irf(cm, IrfTarget(response, shock, h), T) for h in horizons])


def misspec_norm(alpha: LagPolynomial, D) -> float:
    """||alpha(L)|| = sqrt(sum_l tr(D alpha_l' D^{-1} alpha_l))."""
    d = np.diag(D) if np.ndim(D) == 2 else np.asarray(D, dtype=float).reshape(-1)
    if d.shape != (alpha.m,):
        raise ModelError(f"D must be {alpha.m}x{alpha.m}")
    if not np.all(d > 0):
        raise ModelError("D must have strictly positive diagonal")
    # tr(D a' D^{-1} a) = sum_{r,c} a_{rc}^2 d_c / d_r
    w = d[None, :] / d[:, None]
    return float(np.sqrt(np.sum(alpha.coeffs**2 * w[None])))


def proxy_reparametrize(model: LocalModel) -> tuple[LocalModel, float]:
    """Rewrite a proxy-ordered-first model in terms of orthogonal shocks.

    The proxy y_1 = (...) + eps_1 + eps_m loads on the shock of interest and
    on a noise shock eps_m.  Returns the model in the rotated shocks
    eps~ = Q^{-1} eps together with the attenuation factor s1/(s1 + sm).
    """
    H, d, m = model.impact, model.shock_vars, model.n_shocks
    problems = []
    if m < 2:
        problems.append("need at least two shocks (signal and proxy noise)")
    else:
        first_row = np.zeros(m)
        first_row[0] = first_row[-1] = 1.0
        if not np.array_equal(H[0], first_row):
            problems.append("first row of H must equal (1, 0, ..., 0, 1)")
        if np.any(H[1:, -1] != 0):
            problems.append("last column of H must be zero except its first element")
        if np.any(model.misspec.coeffs[:, :, -1] != 0):
            problems.append("last column of alpha(L) must be zero")
        if np.any(model.lag_matrices[:, 1:, 0] != 0):
            problems.append("lagged proxy must not enter the equations of the other variables")
    if problems:
        raise ModelError("proxy structure violated: " + "; ".join(problems))
    s1, sm = d[0], d[-1]
    scale = s1 / (s1 + sm)
    Q = proxy_rotation(d)
    Qinv = np.linalg.inv(Q)
    new_d = d.copy()
    new_d[0] = s1 + sm
    new_d[-1] = s1 * sm / (s1 + sm)
    new_alpha = LagPolynomial(np.einsum("ab,lbc,cd->lad", Qinv, model.misspec.coeffs, Q), m)
    new = LocalModel(model.lag_matrices, H @ Q, new_d, new_alpha, model.zeta, model.intercept)
    return new, float(scale)


def proxy_rotation(shock_vars) -> np.ndarray:
    """The matrix Q with eps = Q eps~ used by :func:`proxy_reparametrize`."""
    d = np.asarray(shock_vars, float)
    s = d[0] / (d[0] + d[-1])
    Q = np.eye(d.size)
    Q[0, 0], Q[0, -1], Q[-1, 0], Q[-1, -1] = s, -1.0, 1.0 - s, 1.0
    return Q


# ---------------------------------------------------------------- JSON I/O

def model_to_dict(model: LocalModel) -> dict:
    return {
        "lag_matrices": model.lag_matrices.tolist(),
        "impact": model.impact.tolist(),
        "shock_vars": model.shock_vars.tolist(),
        "misspec": model.misspec.coeffs.tolist(),
        "zeta": model.zeta,
        "intercept": model.intercept.tolist(),
    }


_MODEL_KEYS = {"lag_matrices", "impact", "shock_vars", "misspec", "zeta", "intercept"}
_REQUIRED_KEYS = {"lag_matrices", "impact", "shock_vars"}


def model_from_dict(d: dict) -> LocalModel:
    unknown = set(d) - _MODEL_KEYS
    if unknown:
        raise ModelError(f"unknown model fields: {sorted(unknown)}")
    missing = _REQUIRED_KEYS - set(d)
    if missing:
        raise ModelError(f"missing model fields: {sorted(missing)}")
    impact = np.asarray(d["impact"], dtype=float)
    m = impact.shape[1] if impact.ndim == 2 else 1
    alpha = None
    if d.get("misspec") is not None:
        alpha = LagPolynomial(np.asarray(d["misspec"], dtype=float).reshape(-1, m, m), m)
    return LocalModel(
        d["lag_matrices"], impact, d["shock_vars"], alpha, d.get("zeta", 0.5), d.get("intercept")
    )


def save_model(model: LocalModel, path) -> None:
    # json writes floats via repr(), which round-trips binary64 exactly
    Path(path).write_text(json.dumps(model_to_dict(model), indent=2) + "\n")


def load_model(path) -> LocalModel:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ModelError(f"{path}: not valid JSON ({exc})") from None
    if not isinstance(data, dict):
        raise ModelError(f"{path}: expected a JSON object")
    return model_from_dict(data)
