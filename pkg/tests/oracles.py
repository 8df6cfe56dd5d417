"""Dense reference operators built from pure index arithmetic.

Everything here is deliberately independent of the package under test:
matrices are filled entry by entry from the difference stencils and the
circular-convolution sum, so they can serve as ground truth for both the
spatial operators and the spectral solvers.
"""

import numpy as np


def site_index(k1, k2, shape):
    """Row-major flattening of lattice coordinates."""
    return k1 * shape[1] + k2


def dense_forward_diff(theta, shape):
    """Matrix of the forward difference along ``theta`` acting on vec(f)."""
    d1, d2 = shape
    n = d1 * d2
    c, s = np.cos(theta), np.sin(theta)
    M = np.zeros((n, n))
    for k1 in range(d1):
        for k2 in range(d2):
            i = site_index(k1, k2, shape)
            M[i, site_index(k1, (k2 + 1) % d2, shape)] += c
            M[i, i] -= c
            M[i, site_index((k1 + 1) % d1, k2, shape)] += s
            M[i, i] -= s
    return M


def dense_backward_diff(theta, shape):
    """Matrix of the backward difference along ``theta`` acting on vec(f)."""
    d1, d2 = shape
    n = d1 * d2
    c, s = np.cos(theta), np.sin(theta)
    M = np.zeros((n, n))
    for k1 in range(d1):
        for k2 in range(d2):
            i = site_index(k1, k2, shape)
            M[i, i] += c
            M[i, site_index(k1, (k2 - 1) % d2, shape)] -= c
            M[i, i] += s
            M[i, site_index((k1 - 1) % d1, k2, shape)] -= s
    return M


def dense_convolution(h, shape):
    """Matrix of circular convolution with kernel ``h`` acting on vec(f)."""
    d1, d2 = shape
    n = d1 * d2
    M = np.zeros((n, n))
    for k1 in range(d1):
        for k2 in range(d2):
            i = site_index(k1, k2, shape)
            for m1 in range(d1):
                for m2 in range(d2):
                    # (h * f)[k] = sum_m h[m] f[k - m]
                    j = site_index((k1 - m1) % d1, (k2 - m2) % d2, shape)
                    M[i, j] += h[m1, m2]
    return M


def vec(f):
    return np.asarray(f).reshape(-1)


def unvec(x, shape):
    return np.asarray(x).reshape(shape)


# ---------------------------------------------------------------------
# Dense normal-equation references for the frequency-domain subproblems.
# Each one minimizes the same quadratic as the solver's closed form, but
# through explicit matrices and numpy.linalg.solve.
# ---------------------------------------------------------------------


def dense_u_solve(state, f, h, params):
    """Smooth-component quadratic via dense normal equations."""
    shape = f.shape
    n = f.size
    L = params.L
    C = dense_convolution(h, shape)
    A = params.beta5 * (C.T @ C)
    b = np.zeros(n)
    for l in range(L):
        D = dense_forward_diff(np.pi * l / L, shape)
        A += params.beta2 * (D.T @ D)
        b += params.beta2 * (D.T @ vec(state.r[l] + state.lam2[l] / params.beta2))
    data = (
        vec(f)
        - C @ vec(state.v)
        - C @ vec(state.rho)
        - vec(state.eps)
        + vec(state.lam5) / params.beta5
    )
    b += params.beta5 * (C.T @ data)
    return unvec(np.linalg.solve(A, b), shape)


def dense_t_solve(state, params):
    """Relay-field Jacobi sweep via dense per-layer normal equations."""
    shape = state.d.shape
    L = params.L
    backs = [dense_backward_diff(np.pi * l / L, shape) for l in range(L)]
    out = np.empty_like(state.t)
    for l in range(L):
        c = vec(state.d) + vec(state.lam3) / params.beta3
        for lp in range(L):
            if lp != l:
                c -= backs[lp] @ vec(state.t[lp])
        B = backs[l]
        A = params.beta3 * (B.T @ B) + params.beta4 * np.eye(state.d.size)
        rhs = params.beta3 * (B.T @ c) + params.beta4 * vec(
            state.y[l] - state.lam4[l] / params.beta4
        )
        out[l] = unvec(np.linalg.solve(A, rhs), shape)
    out[L] = state.y[L] - state.lam4[L] / params.beta4
    return out


def dense_g_solve(state, v, params):
    """Texture-field Jacobi sweep via dense per-layer normal equations."""
    shape = v.shape
    S = params.S
    backs = [dense_backward_diff(np.pi * s / S, shape) for s in range(S)]
    out = np.empty_like(state.g)
    for s in range(S):
        c = vec(v) + vec(state.lam7) / params.beta7
        for sp in range(S):
            if sp != s:
                c -= backs[sp] @ vec(state.g[sp])
        B = backs[s]
        A = params.beta7 * (B.T @ B) + params.beta6 * np.eye(v.size)
        rhs = params.beta7 * (B.T @ c) + params.beta6 * vec(
            state.w[s] + state.lam6[s] / params.beta6
        )
        out[s] = unvec(np.linalg.solve(A, rhs), shape)
    return out
