"""Derivative-free Nelder-Mead minimization of many problems in lockstep.

Each problem keeps its own simplex; one iteration advances every unfinished
problem, with the reflect/expand/contract/shrink branches resolved by masks.
The objective receives the trial points of a subset of problems together
with their problem indices, so problem-specific data can be gathered inside
it.
"""

import numpy as np

__all__ = ["batch_nelder_mead", "nelder_mead"]

REFLECT, EXPAND, CONTRACT, SHRINK = 1.0, 2.0, 0.5, 0.5


def _safe(values):
    values = np.asarray(values, dtype=float)
    return np.where(np.isnan(values), np.inf, values)


def batch_nelder_mead(func, x0, step, conv_tol=1e-6, max_iters=500):
    """Minimize ``B`` independent objectives.

    Parameters
    ----------
    func : callable
        ``func(points, idx)`` with ``points`` of shape ``(k, n)`` and ``idx``
        the ``(k,)`` problem indices; returns ``(k,)`` objective values.
        NaN is treated as ``+inf``.
    x0 : array_like, shape (B, n)
        Starting points.
    step : float or array_like
        Initial simplex edge length, broadcastable to ``(B, n)``.
    conv_tol : float
        A problem converges once every vertex lies within ``conv_tol`` (max
        norm) of the best vertex.
    max_iters : int
        Iteration cap per problem.

    Returns
    -------
    x : ndarray (B, n)
    fx : ndarray (B,)
    iterations : ndarray (B,) of int
    converged : ndarray (B,) of bool
    """
    x0 = np.atleast_2d(np.asarray(x0, dtype=float))
    nprob, n = x0.shape
    step = np.broadcast_to(np.asarray(step, dtype=float), (nprob, n))
    every = np.arange(nprob)

    simplex = np.repeat(x0[:, None, :], n + 1, axis=1)
    for i in range(n):
        simplex[:, i + 1, i] += step[:, i]
    fvals = np.empty((nprob, n + 1))
    for i in range(n + 1):
        fvals[:, i] = _safe(func(simplex[:, i, :], every))

    iterations = np.zeros(nprob, dtype=int)
    converged = np.zeros(nprob, dtype=bool)
    active = np.ones(nprob, dtype=bool)

    for _ in range(max_iters + 1):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        order = np.argsort(fvals[idx], axis=1, kind="stable")
        xs = np.take_along_axis(simplex[idx], order[:, :, None], axis=1)
        fs = np.take_along_axis(fvals[idx], order, axis=1)
        simplex[idx], fvals[idx] = xs, fs

        spread = np.max(np.abs(xs[:, 1:, :] - xs[:, :1, :]), axis=(1, 2))
        done = spread <= conv_tol
        converged[idx[done]] = True
        active[idx[done]] = False
        capped = iterations[idx] >= max_iters
        active[idx[capped]] = False
        keep = ~done & ~capped
        idx, xs, fs = idx[keep], xs[keep], fs[keep]
        if idx.size == 0:
            break

        best, second_worst, worst = fs[:, 0], fs[:, n - 1], fs[:, n]
        centroid = xs[:, :n, :].mean(axis=1)
        xw = xs[:, n, :]
        xr = centroid + REFLECT * (centroid - xw)
        fr = _safe(func(xr, idx))

        new_x = xr.copy()
        new_f = fr.copy()
        shrink = np.zeros(idx.size, dtype=bool)

        exp = fr < best
        if exp.any():
            xe = centroid[exp] + EXPAND * (centroid[exp] - xw[exp])
            fe = _safe(func(xe, idx[exp]))
            better = fe < fr[exp]
            sel = np.flatnonzero(exp)[better]
            new_x[sel], new_f[sel] = xe[better], fe[better]

        outside = (fr >= second_worst) & (fr < worst)
        if outside.any():
            xc = centroid[outside] + CONTRACT * (xr[outside] - centroid[outside])
            fc = _safe(func(xc, idx[outside]))
            ok = fc <= fr[outside]
            pos = np.flatnonzero(outside)
            new_x[pos[ok]], new_f[pos[ok]] = xc[ok], fc[ok]
            shrink[pos[~ok]] = True

        inside = fr >= worst
        if inside.any():
            xc = centroid[inside] + CONTRACT * (xw[inside] - centroid[inside])
            fc = _safe(func(xc, idx[inside]))
            ok = fc < worst[inside]
            pos = np.flatnonzero(inside)
            new_x[pos[ok]], new_f[pos[ok]] = xc[ok], fc[ok]
            shrink[pos[~ok]] = True

        accept = ~shrink
        simplex[idx[accept], n, :] = new_x[accept]
        fvals[idx[accept], n] = new_f[accept]

        if shrink.any():
            sidx = idx[shrink]
            base = simplex[sidx, :1, :]
            simplex[sidx, 1:, :] = base + SHRINK * (simplex[sidx, 1:, :] - base)
            for i in range(1, n + 1):
                fvals[sidx, i] = _safe(func(simplex[sidx, i, :], sidx))

        iterations[idx] += 1

    order = np.argmin(fvals, axis=1)
    x = simplex[every, order, :]
    return x, fvals[every, order], iterations, converged


def nelder_mead(func, x0, step=0.1, conv_tol=1e-6, max_iters=500):
    """Single-problem convenience wrapper; ``func`` maps an ``(n,)`` point to a float."""
    x0 = np.asarray(x0, dtype=float)

    def wrapped(points, idx):
        return np.array([func(p) for p in points])

    x, fx, it, conv = batch_nelder_mead(wrapped, x0[None, :], step, conv_tol, max_iters)
    return x[0], float(fx[0]), int(it[0]), bool(conv[0])
