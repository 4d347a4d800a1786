"""Pure-Python (numpy) versions of the compiled kernels in ``_kernels.pyx``.

Same signatures and arithmetic order as the compiled versions; used when the
extension is not built or ``APCSIM_PURE_PYTHON`` is set.
"""
import numpy as np

BALL, HALFSPACE, BOX, SINGLETON = 0, 1, 2, 3


def _project(kind, prm, X, m):
    """Project the rows of ``X`` (N, m) onto one packed body."""
    if kind == BALL:
        c, r = prm[:m], prm[m]
        d = X - c
        nrm = np.sqrt(np.einsum("ij,ij->i", d, d))
        far = nrm > r
        out = X.copy()
        out[far] = c + d[far] * (r / nrm[far])[:, None]
        return out
    if kind == HALFSPACE:
        a, b = prm[:m], prm[m]
        t = X @ a - b
        viol = t > 0
        out = X.copy()
        out[viol] = X[viol] - (t[viol] / (a @ a))[:, None] * a
        return out
    if kind == BOX:
        return np.minimum(np.maximum(X, prm[:m]), prm[m:2 * m])
    if kind == SINGLETON:
        return np.broadcast_to(prm[:m], X.shape).copy()
    raise ValueError(f"unknown body kind {kind}")


def _distance(kind, prm, X, m):
    if kind == BALL:
        d = X - prm[:m]
        return np.maximum(np.sqrt(np.einsum("ij,ij->i", d, d)) - prm[m], 0.0)
    if kind == HALFSPACE:
        a = prm[:m]
        return np.maximum(X @ a - prm[m], 0.0) / np.sqrt(a @ a)
    diff = X - _project(kind, prm, X, m)
    return np.sqrt(np.einsum("ij,ij->i", diff, diff))


def cyclic_projection_batch(kinds, params, X0, tol, max_sweeps):
    """Cyclic projections onto the packed bodies, one independent run per row of ``X0``.

    Returns ``(X, sweeps, converged)``; a row converges once a full sweep
    moves it by less than ``tol``.
    """
    X = np.array(X0, dtype=float)
    N, m = X.shape
    sweeps = np.zeros(N, dtype=np.int64)
    converged = np.zeros(N, dtype=np.uint8)
    live = np.arange(N)
    Y = X.copy()
    for s in range(1, max_sweeps + 1):
        prev = Y
        for b in range(len(kinds)):
            Y = _project(kinds[b], params[b], Y, m)
        step = Y - prev
        done = np.einsum("ij,ij->i", step, step) < tol * tol
        sweeps[live] = s
        if np.any(done):
            X[live[done]] = Y[done]
            converged[live[done]] = 1
            live, Y = live[~done], Y[~done]
            if live.size == 0:
                break
    if live.size:
        X[live] = Y
    return X, sweeps, converged


def grid_feasible_mask(kinds, params, xs, ys, tol):
    """``mask[r, c]`` is 1 iff ``(xs[c], ys[r])`` is within ``tol`` of every body."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    mask = np.zeros((ys.size, xs.size), dtype=np.uint8)
    rows = max(1, 262_144 // max(xs.size, 1))
    for r0 in range(0, ys.size, rows):
        yy = ys[r0:r0 + rows]
        P = np.empty((yy.size * xs.size, 2))
        P[:, 0] = np.tile(xs, yy.size)
        P[:, 1] = np.repeat(yy, xs.size)
        ok = np.ones(P.shape[0], dtype=bool)
        for b in range(len(kinds)):
            ok &= _distance(kinds[b], params[b], P, 2) <= tol
        mask[r0:r0 + yy.size] = ok.reshape(yy.size, xs.size)
    return mask


def blend_consensus_final(kinds, params, weights, alphas, X0):
    """Final states of the exact-direction blend recursion for a batch of initial states.

    ``x_i <- sum_j W_ij ((1 - a_j) x_j + a_j P_j(x_j))`` with ``W = weights[k % S]``
    and ``a = alphas[k]`` for ``k`` in ``range(len(alphas))``; ``X0`` is (B, n, m).
    """
    X = np.array(X0, dtype=float)
    B, n, m = X.shape
    S = weights.shape[0]
    for k in range(alphas.shape[0]):
        W = weights[k % S]
        Pa = np.empty_like(X)
        for j in range(n):
            a = alphas[k, j]
            xj = X[:, j, :]
            Pa[:, j, :] = (1.0 - a) * xj + a * _project(kinds[j], params[j], xj, m)
        X = np.einsum("ij,bjm->bim", W, Pa)
    return X


def dykstra_batch(A, b, X0, tol, eps, max_sweeps):
    """Dykstra's cyclic projection onto ``{x : A x <= b}``, one row at a time in lockstep.

    A row stops once a sweep moves it and its corrections less than ``tol`` and it violates no face by
    more than ``eps * (1 + |x|)``.
    """
    X = np.array(X0, dtype=float)
    N = len(X)
    sweeps = np.zeros(N, dtype=np.int64)
    conv = np.zeros(N, dtype=np.uint8)
    a2 = np.einsum("ij,ij->i", A, A)
    anorm = np.sqrt(a2)
    idx = np.flatnonzero(np.any(X @ A.T - b > 0, axis=1))
    conv[np.setdiff1d(np.arange(N), idx)] = 1
    y = X[idx]
    incr = np.zeros((len(b),) + y.shape)
    for s in range(1, max_sweeps + 1):
        if not len(idx):
            break
        prev = y.copy()
        drift = np.zeros(len(y))
        for f in range(len(b)):
            z = y + incr[f]
            t = np.maximum(z @ A[f] - b[f], 0.0) / a2[f]
            y = z - t[:, None] * A[f]
            d = z - y - incr[f]
            drift += np.einsum("ij,ij->i", d, d)
            incr[f] = z - y
        sweeps[idx] = s
        d = y - prev
        # the iterate can pause while the corrections still drift
        settled = (np.einsum("ij,ij->i", d, d) < tol * tol) & (drift < tol * tol)
        slack = (y @ A.T - b) / anorm
        settled &= np.all(slack <= eps * (1.0 + np.sqrt(np.einsum("ij,ij->i", y, y)))[:, None], axis=1)
        if settled.any():
            X[idx[settled]] = y[settled]
            conv[idx[settled]] = 1
            keep = ~settled
            idx, y, incr = idx[keep], y[keep], incr[:, keep]
    X[idx] = y
    return X, sweeps, conv
