"""Dense primal active-set solver for convex quadratic programs.

Solves min 0.5 x'Qx + c'x subject to Ax = b and Gx <= h, with Q positive
semidefinite (curvature may vanish along some directions, e.g. variables
entering the objective linearly).  Steps are computed in the null space of
the working constraints; when the reduced Hessian is singular along the
reduced gradient the subproblem is a descent ray, followed until a
constraint blocks.  The caller must supply a feasible start.
"""

from dataclasses import dataclass

import numpy as np


class QPNoConvergence(RuntimeError):
    pass


@dataclass(frozen=True)
class QPResult:
    x: np.ndarray
    eq_duals: np.ndarray
    ineq_duals: np.ndarray
    working_set: tuple
    iterations: int


def _null_space(C: np.ndarray, n: int) -> np.ndarray:
    if C.shape[0] == 0:
        return np.eye(n)
    _, s, vt = np.linalg.svd(C, full_matrices=True)
    tol = max(C.shape) * np.finfo(float).eps * (s[0] if len(s) else 1.0)
    rank = int(np.sum(s > tol))
    return vt[rank:].T


def solve_convex_qp(Q, c, A, b, G, h, x0, max_iter=None,
                    feas_tol=1e-9, mult_tol=1e-9) -> QPResult:
    Q = np.asarray(Q, dtype=float)
    c = np.asarray(c, dtype=float)
    A = np.asarray(A, dtype=float).reshape(-1, len(c))
    G = np.asarray(G, dtype=float).reshape(-1, len(c))
    b = np.asarray(b, dtype=float).reshape(-1)
    h = np.asarray(h, dtype=float).reshape(-1)
    n = len(c)
    x = np.array(x0, dtype=float)
    if A.shape[0] and np.max(np.abs(A @ x - b)) > feas_tol:
        raise ValueError("x0 violates equality constraints")
    slack = h - G @ x
    if G.shape[0] and slack.min() < -feas_tol:
        raise ValueError("x0 violates inequality constraints")
    working = sorted(np.flatnonzero(slack <= feas_tol).tolist())
    cap = max_iter if max_iter is not None else 60 * (n + G.shape[0] + 1)

    for it in range(1, cap + 1):
        g = Q @ x + c
        C = np.vstack([A, G[working]]) if working else A
        Z = _null_space(C, n)
        ray = False
        if Z.shape[1] == 0:
            d = np.zeros(n)
        else:
            Hr = Z.T @ Q @ Z
            Hr = 0.5 * (Hr + Hr.T)
            gr = Z.T @ g
            w, V = np.linalg.eigh(Hr)
            wmax = max(float(w[-1]), 0.0)
            thresh = max(wmax, 1.0) * 1e-12
            pos = w > thresh
            coeff = V.T @ (-gr)
            y = V[:, pos] @ (coeff[pos] / w[pos]) if pos.any() else np.zeros(Z.shape[1])
            u = (-gr) - (V[:, pos] @ coeff[pos] if pos.any() else 0.0)
            if np.linalg.norm(u) > 1e-9 * (1.0 + np.linalg.norm(gr)):
                d = Z @ u
                ray = True
            else:
                d = Z @ y

        step_scale = 1.0 + float(np.abs(x).max())
        if not ray and np.abs(d).max() <= 1e-11 * step_scale:
            stacked = np.hstack([A.T, G[working].T]) if working else A.T
            if stacked.shape[1] == 0:
                return QPResult(x, np.zeros(0), np.zeros(G.shape[0]),
                                tuple(working), it)
            duals, *_ = np.linalg.lstsq(stacked, -g, rcond=None)
            lam = duals[:A.shape[0]]
            mu_w = duals[A.shape[0]:]
            if len(mu_w) == 0 or mu_w.min() >= -mult_tol:
                mu = np.zeros(G.shape[0])
                for idx, val in zip(working, mu_w):
                    mu[idx] = max(val, 0.0)
                return QPResult(x, lam, mu, tuple(working), it)
            working.pop(int(np.argmin(mu_w)))
            continue

        Gd = G @ d
        blocked = [i for i in range(G.shape[0])
                   if i not in working and Gd[i] > 1e-12 * step_scale]
        if blocked:
            ratios = np.array([(h[i] - G[i] @ x) / Gd[i] for i in blocked])
            ratios = np.maximum(ratios, 0.0)
            kmin = int(np.argmin(ratios))
            alpha_block, iblock = float(ratios[kmin]), blocked[kmin]
        else:
            alpha_block, iblock = np.inf, None
        alpha = alpha_block if ray else min(1.0, alpha_block)
        if not np.isfinite(alpha):
            raise QPNoConvergence("unbounded descent ray; problem malformed")
        x = x + alpha * d
        if iblock is not None and alpha_block <= alpha:
            working = sorted(working + [iblock])

    raise QPNoConvergence(f"active-set QP exceeded {cap} iterations")
