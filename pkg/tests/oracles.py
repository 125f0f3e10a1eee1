"""Brute-force reference computations that share no code with the package."""

import numpy as np
import scipy.linalg


def companion(lag_mats):
    p, k, _ = lag_mats.shape
    A = np.zeros((k * p, k * p))
    A[:k] = np.hstack(list(lag_mats))
    if p > 1:
        A[k:, :-k] = np.eye(k * (p - 1))
    return A


def lyapunov_series(A, Sigma, tol=1e-15, cap=100000):
    """S = sum_s A^s Sigma A'^s by direct summation."""
    S = np.zeros_like(Sigma)
    term = Sigma.copy()
    for _ in range(cap):
        S += term
        term = A @ term @ A.T
        if np.max(np.abs(term)) < tol:
            return S
    raise RuntimeError("series did not converge")


def _recursive_irf(B, Sigma, k, p, h, i, j):
    """e_i' A^h nu for VAR coefficient block B (k x kp) and residual covariance Sigma."""
    A = companion(np.stack([B[:, l * k:(l + 1) * k] for l in range(p)]))
    C = np.linalg.cholesky(0.5 * (Sigma + Sigma.T))
    nu = np.zeros(k * p)
    nu[:k] = C[:, j] / C[j, j]
    return (np.linalg.matrix_power(A, h) @ nu)[i]


def delta_method_avar_var(lag_mats, impact, shock_vars, h, i, j, step=1e-6):
    """aVar of the recursive VAR IRF from numerical gradients and Gaussian (A, Sigma) limits.

    Under i.i.d. Gaussian shocks sqrt(T) vec(B_hat - B) ~ N(0, Sigma kron S^{-1})
    (row-major vec of B) and sqrt(T)(Sigma_hat - Sigma) has
    Cov(s_ab, s_cd) = Sigma_ac Sigma_bd + Sigma_ad Sigma_bc, independent of B_hat.
    """
    p, k, _ = lag_mats.shape
    A = companion(lag_mats)
    H = np.zeros((k * p, impact.shape[1]))
    H[:k] = impact
    Sig_full = (H * shock_vars) @ H.T
    S = lyapunov_series(A, Sig_full)
    Sigma = Sig_full[:k, :k]
    B = np.hstack(list(lag_mats))

    def f(Bv, Sv):
        return _recursive_irf(Bv.reshape(k, k * p), Sv.reshape(k, k), k, p, h, i, j)

    b0, s0 = B.reshape(-1), Sigma.reshape(-1)
    gB = np.array([(f(b0 + step * e, s0) - f(b0 - step * e, s0)) / (2 * step) for e in np.eye(b0.size)])
    gS = np.zeros(s0.size)
    for a in range(k):
        for c in range(k):
            E = np.zeros((k, k))
            E[a, c] = E[c, a] = 1.0
            if a == c:
                gS[a * k + c] = (f(b0, s0 + step * E.ravel()) - f(b0, s0 - step * E.ravel())) / (2 * step)
            else:
                # derivative along the symmetric direction, split between (a,c) and (c,a)
                gS[a * k + c] = 0.5 * (f(b0, s0 + step * E.ravel()) - f(b0, s0 - step * E.ravel())) / (2 * step)
    VB = np.kron(Sigma, np.linalg.inv(S))
    VS = np.einsum("ac,bd->abcd", Sigma, Sigma) + np.einsum("ad,bc->abcd", Sigma, Sigma)
    VS = VS.reshape(k * k, k * k)
    return gB @ VB @ gB + gS @ VS @ gS


def pseudo_true_bias(lag_mats, impact, shock_vars, alpha, h, i, j, eps=1e-4):
    """d/d eps [ plim VAR(p) IRF - theta ] at eps = 0 for MA perturbation eps*alpha(L).

    Uses population projections of y_t on p lags under the perturbed process,
    computed from a state vector that carries the needed shock lags.
    """
    p, k, _ = lag_mats.shape
    m = impact.shape[1]
    L = alpha.shape[0]

    def plim_minus_truth(e):
        # state s_t = (y_t, ..., y_{t-p}, e_t, ..., e_{t-L}); s_t = F s_{t-1} + G e_t
        q = p + 1
        n = k * q + m * (L + 1)
        F = np.zeros((n, n))
        G = np.zeros((n, m))
        e0 = k * q
        G[e0:e0 + m] = np.eye(m)
        for l in range(1, L + 1):
            F[e0 + l * m:e0 + (l + 1) * m, e0 + (l - 1) * m:e0 + l * m] = np.eye(m)
        for l in range(1, p + 1):
            F[:k, (l - 1) * k:l * k] = lag_mats[l - 1]
        G[:k] = impact
        # e_{t-l} sits at position l-1 of the previous state's e block
        for l in range(1, L + 1):
            F[:k, e0 + (l - 1) * m:e0 + l * m] += e * impact @ alpha[l - 1]
        for l in range(1, q):
            F[l * k:(l + 1) * k, (l - 1) * k:l * k] = np.eye(k)
        V = scipy.linalg.solve_discrete_lyapunov(F, (G * shock_vars) @ G.T)
        Yy = V[:k, :k]
        X = slice(k, k * q)
        Cyx = V[:k, X]
        Vx = V[X, X]
        B = np.linalg.solve(Vx, Cyx.T).T
        Sigma = Yy - B @ Vx @ B.T
        delta = _recursive_irf(B, Sigma, k, p, h, i, j)
        A = companion(lag_mats)
        Hc = np.zeros((k * p, m))
        Hc[:k] = impact
        theta = (np.linalg.matrix_power(A, h) @ Hc)[i, j]
        for l in range(1, min(h, L) + 1):
            theta += e * (np.linalg.matrix_power(A, h - l) @ Hc @ alpha[l - 1])[i, j]
        return delta - theta

    return (plim_minus_truth(eps) - plim_minus_truth(-eps)) / (2 * eps)


def normal_tail_quad(b, c):
    """P(|Z + b| > c) by high-precision quadrature."""
    import mpmath as mp

    mp.mp.dps = 40
    dens = lambda z: mp.exp(-z * z / 2) / mp.sqrt(2 * mp.pi)
    inside = mp.quad(dens, [-c - b, c - b])
    return float(1 - inside)
