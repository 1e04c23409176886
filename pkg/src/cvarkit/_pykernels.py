"""Numpy implementations of the recursive kernels.

These are the reference versions; ``_ckernels.pyx`` mirrors them loop for loop.
"""
import numpy as np


def simulate_var(intercept, coefs, eps, init):
    """Run the VAR recursion ``x_t = c + sum_l A_l x_{t-l} + eps_t``.

    Parameters
    ----------
    intercept : (n,) array
    coefs : (p, n, n) array
        ``coefs[l - 1]`` is the lag-``l`` matrix.
    eps : (B, T, n) array
        Innovations for ``B`` independent paths.
    init : (p, n) array
        Presample values, oldest first. Shared by every path.

    Returns
    -------
    (B, p + T, n) array whose first ``p`` rows repeat ``init``.
    """
    intercept = np.asarray(intercept, dtype=float)
    coefs = np.asarray(coefs, dtype=float)
    eps = np.asarray(eps, dtype=float)
    init = np.asarray(init, dtype=float)
    p = coefs.shape[0]
    n_paths, n_steps, _ = eps.shape
    out = np.empty((n_paths, p + n_steps, eps.shape[2]))
    out[:, :p] = init
    # (B, n) @ A_l.T per lag; vectorised over paths, sequential in time
    coefs_t = np.transpose(coefs, (0, 2, 1))
    for t in range(n_steps):
        acc = intercept + eps[:, t]
        for lag in range(p):
            acc = acc + out[:, p + t - lag - 1] @ coefs_t[lag]
        out[:, p + t] = acc
    return out


def ma_coefficients(coefs, horizons):
    """Moving-average matrices ``Phi_0..Phi_H`` of a VAR(p).

    ``Phi_0 = I`` and ``Phi_h = sum_{l=1}^{min(h, p)} A_l Phi_{h-l}``.
    """
    coefs = np.asarray(coefs, dtype=float)
    p, n, _ = coefs.shape
    phi = np.zeros((horizons + 1, n, n))
    phi[0] = np.eye(n)
    for h in range(1, horizons + 1):
        acc = np.zeros((n, n))
        for lag in range(1, min(h, p) + 1):
            acc += coefs[lag - 1] @ phi[h - lag]
        phi[h] = acc
    return phi
