"""Independent oracles the solvers are checked against.

Everything here deliberately avoids the library's electrical/active-set
code paths: pricing optima come from enumerating cap-pinned subsets and
solving dense equality-KKT systems with lstsq; resistances come from
current injection into the raw Laplacian; sensitivities from central
finite differences; extended-model optima from face enumeration and
feasible random sampling.
"""

import itertools

import numpy as np


def pinned_equality_prices(net, a_mat, pinned):
    """Optimal prices with the pinned arcs fixed at the cap.

    Solves the equality-constrained concave QP (flow balance only) via a
    dense KKT system.  Returns an (N, N) price matrix (NaN off arcs) or
    None when the system is inconsistent.
    """
    free = [arc for arc in net.arcs if arc not in pinned]
    nf = len(free)
    n = net.n_locations
    Q = np.zeros((nf, nf))
    q = np.zeros(nf)
    A = np.zeros((n, nf))
    b = np.zeros(n)
    for k, (i, j) in enumerate(free):
        th, xi = net.demand[i, j], net.travel_time[i, j]
        Q[k, k] = 2.0 * th * xi
        q[k] = -th * xi * (1.0 - a_mat[i, j] + net.unit_cost)
        A[i, k] -= th
        A[j, k] += th
        b[i] -= th
        b[j] += th
    kkt = np.block([[Q, A.T], [A, np.zeros((n, n))]])
    rhs = np.concatenate([-q, b])
    sol, *_ = np.linalg.lstsq(kkt, rhs, rcond=None)
    if np.linalg.norm(kkt @ sol - rhs) > 1e-7 * (1.0 + np.linalg.norm(rhs)):
        return None
    prices = np.full((n, n), np.nan)
    for k, (i, j) in enumerate(free):
        prices[i, j] = sol[k]
    for i, j in pinned:
        prices[i, j] = 1.0
    return prices


def pricing_objective(net, a_mat, prices):
    total = 0.0
    for i, j in net.arcs:
        th, xi = net.demand[i, j], net.travel_time[i, j]
        p = prices[i, j]
        total += th * xi * (1.0 - p) * (p + a_mat[i, j] - net.unit_cost)
    return total


def enumerate_optimal_prices(net, a_mat, tol=1e-9):
    """Global optimum of the pricing problem by active-set enumeration.

    Tries every subset of arcs pinned to the cap; keeps candidates whose
    free prices respect the cap; returns the best (prices, payoff).
    Intended for |arcs| <= 10.
    """
    arcs = net.arcs
    best_prices, best_val = None, -np.inf
    for r in range(len(arcs) + 1):
        for pinned in itertools.combinations(arcs, r):
            prices = pinned_equality_prices(net, a_mat, set(pinned))
            if prices is None:
                continue
            on = [prices[i, j] for i, j in arcs]
            if max(on) > 1.0 + tol:
                continue
            val = pricing_objective(net, a_mat, prices)
            if val > best_val:
                best_val, best_prices = val, prices
    return best_prices, best_val


def injection_resistance(weights, i, j):
    """Effective resistance from a unit current injected at i, drawn at j.

    Grounds the last node and solves the reduced Laplacian system
    directly; no pseudoinverse involved.
    """
    n = weights.shape[0]
    lap = np.diag(weights.sum(axis=1)) - weights
    rhs = np.zeros(n)
    rhs[i] += 1.0
    rhs[j] -= 1.0
    phi = np.zeros(n)
    phi[:-1] = np.linalg.solve(lap[:-1, :-1], rhs[:-1])
    return phi[i] - phi[j]


def central_difference_sensitivity(solver, net, a_mat, arc, eps=1e-5):
    """(p(a + eps) - p(a - eps)) / (2 eps) per arc, via the given solver."""
    x, y = arc
    up = a_mat.copy()
    up[x, y] += eps
    down = a_mat.copy()
    down[x, y] -= eps
    p_up = solver(net, up).prices
    p_down = solver(net, down).prices
    return (p_up - p_down) / (2.0 * eps)


def _extended_dimensions(net, params):
    arcs = net.arcs
    th, xi = net.arc_demand, net.arc_time
    na = len(arcs)
    n = 2 * na  # w lives on the arc set
    quad = np.zeros((n, n))
    quad[np.arange(na), np.arange(na)] = 2.0 * th * xi
    A = np.zeros((net.n_locations, n))
    for k, (u, v) in enumerate(arcs):
        A[u, k] -= th[k]
        A[v, k] += th[k]
        A[u, na + k] += 1.0
        A[v, na + k] -= 1.0
    b = net.demand.sum(axis=0) - net.demand.sum(axis=1)
    gcap = np.concatenate([-th * xi, xi])
    hcap = params.psi - float((th * xi).sum())
    return arcs, th, xi, na, n, quad, A, b, gcap, hcap


def extended_uniform_objective(net, a_mat, params, p_vec, w_vec):
    th, xi = net.arc_demand, net.arc_time
    a_vec = net.on_arcs(a_mat)
    value = float((xi * th * (1.0 - p_vec)
                   * (p_vec + a_vec - net.unit_cost)).sum())
    value -= float((xi * w_vec).sum()) * params.eta * net.unit_cost
    return value


def enumerate_extended_uniform(net, a_mat, params, tol=1e-7):
    """Global optimum of the uniform-demand extended problem.

    Enumerates faces: subsets of prices pinned to the cap, empty flows
    pinned to zero, capacity active or not.  On each face the stationarity
    plus constraint equations are solved by lstsq; consistent feasible
    candidates are compared by objective.  Feasible for |arcs| <= 5.
    """
    arcs, th, xi, na, n, quad, A, b, gcap, hcap = _extended_dimensions(net, params)
    a_vec = net.on_arcs(a_mat)
    lin = np.concatenate([-th * xi * (1.0 - a_vec + net.unit_cost),
                          xi * params.eta * net.unit_cost])
    best_val, best_point = -np.inf, None
    nodes = net.n_locations
    idx = np.arange(n)
    for p_pin in itertools.chain.from_iterable(
            itertools.combinations(range(na), r) for r in range(na + 1)):
        for w_pin in itertools.chain.from_iterable(
                itertools.combinations(range(na), r) for r in range(na + 1)):
            fixed = {k: 1.0 for k in p_pin}
            fixed.update({na + k: 0.0 for k in w_pin})
            free = np.array([k for k in idx if k not in fixed], dtype=int)
            x_fix = np.zeros(n)
            for k, val in fixed.items():
                x_fix[k] = val
            for cap_active in (False, True):
                rows = []
                rhs = []
                # stationarity on free coordinates
                for k in free:
                    row = np.zeros(len(free) + nodes + 1)
                    col = np.flatnonzero(free == k)[0]
                    row[col] = quad[k, k]
                    row[len(free):len(free) + nodes] = A[:, k]
                    row[-1] = gcap[k] if cap_active else 0.0
                    rows.append(row)
                    rhs.append(-lin[k])
                # flow balance
                for i in range(nodes):
                    row = np.zeros(len(free) + nodes + 1)
                    row[:len(free)] = A[i, free]
                    rows.append(row)
                    rhs.append(b[i] - A[i] @ x_fix)
                if cap_active:
                    row = np.zeros(len(free) + nodes + 1)
                    row[:len(free)] = gcap[free]
                    rows.append(row)
                    rhs.append(hcap - gcap @ x_fix)
                M = np.array(rows)
                r = np.array(rhs)
                sol, *_ = np.linalg.lstsq(M, r, rcond=None)
                if np.linalg.norm(M @ sol - r) > 1e-6 * (1.0 + np.linalg.norm(r)):
                    continue
                x = x_fix.copy()
                x[free] = sol[:len(free)]
                p_vec, w_vec = x[:na], x[na:]
                if p_vec.max() > 1.0 + tol or w_vec.min() < -tol:
                    continue
                if gcap @ x > hcap + tol:
                    continue
                val = extended_uniform_objective(net, a_mat, params, p_vec, w_vec)
                if val > best_val:
                    best_val, best_point = val, (p_vec.copy(), w_vec.copy())
    return best_point, best_val


def sample_feasible_extended(net, params, rng, count=1000, iters=400):
    """Random feasible (p, w) points for the uniform extended problem.

    Projection onto the balance subspace alternated with box and capacity
    projections (POCS); points that fail to converge are discarded.
    Returns a list of (p_vec, w_vec).
    """
    arcs, th, xi, na, n, quad, A, b, gcap, hcap = _extended_dimensions(net, params)
    pinvA = A.T @ np.linalg.pinv(A @ A.T)
    lo = np.concatenate([np.full(na, -3.0), np.zeros(na)])
    hi = np.concatenate([np.ones(na), np.full(na, params.psi / xi.min())])
    g2 = float(gcap @ gcap)
    points = []
    for _ in range(count):
        x = rng.uniform(lo, hi)
        for _ in range(iters):
            x = x - pinvA @ (A @ x - b)
            over = gcap @ x - hcap
            if over > 0:
                x = x - gcap * (over / g2)
            x = np.clip(x, lo, hi)
            if (np.abs(A @ x - b).max() < 1e-10
                    and gcap @ x <= hcap + 1e-10):
                break
        if np.abs(A @ x - b).max() > 1e-8 or gcap @ x > hcap + 1e-8:
            continue
        points.append((x[:na].copy(), x[na:].copy()))
    return points
