"""Chebyshev polynomial graph filtering with power-iteration spectrum bounds.

Filters a node signal as sum_k alpha_k T_k(L~) f where L~ is the Laplacian
rescaled to [-1, 1].  The recurrence applies the operator directly and
never materializes T_k(L~) as a matrix.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .errors import DegenerateSpectrumError, DimensionError, NumericalFailure
from .graph import Graph, laplacian_sparse


def lambda_max(g: Graph, tol: float = 1e-7, max_iter: int = 10000,
               inflation: float = 1.0) -> float:
    """Largest Laplacian eigenvalue estimated by power iteration.

    The start vector is all-ones with a tiny deterministic index tilt so it
    is never orthogonal to the dominant eigenspace.  Convergence is tested
    on the Rayleigh quotient.  `inflation` can stretch the estimate
    (e.g. by 1 + 1e-6) when a certified upper bound matters more than
    agreement with the exact value.
    """
    if not g.edges:
        raise DegenerateSpectrumError(
            "graph has no edges, so L = 0 and 2/lambda_max is undefined"
        )
    if max_iter < 1:
        raise ValueError(f"max_iter must be >= 1, got {max_iter}")
    lap = laplacian_sparse(g)
    v = 1.0 + 1e-6 * np.arange(g.n, dtype=np.float64)
    v /= np.linalg.norm(v)
    rho_prev = np.inf
    for _ in range(max_iter):
        w = lap @ v
        rho = float(v @ w)
        if abs(rho - rho_prev) <= tol * max(1.0, abs(rho)):
            return rho * inflation
        norm = np.linalg.norm(w)
        if norm == 0.0:
            raise NumericalFailure("power iteration collapsed to the null space")
        v = w / norm
        rho_prev = rho
    raise NumericalFailure(
        f"power iteration did not converge within {max_iter} iterations "
        f"(last Rayleigh quotient {rho:.6e})"
    )


def scaled_laplacian(lap, lam_max: float):
    """Rescale a Laplacian so its spectrum lands in [-1, 1]: (2/lam_max) L - I.

    Accepts a dense array or any scipy sparse matrix; returns the same kind.
    """
    if lam_max <= 0.0:
        raise ValueError(f"lam_max must be positive, got {lam_max}")
    if lap.ndim != 2 or lap.shape[0] != lap.shape[1]:
        raise DimensionError(f"expected a square operator, got shape {lap.shape}")
    n = lap.shape[0]
    factor = 2.0 / lam_max
    if sp.issparse(lap):
        return (lap * factor - sp.identity(n, format="csr")).tocsr()
    return np.asarray(lap, dtype=np.float64) * factor - np.eye(n)


def cheb_apply(l_tilde, alpha, f: np.ndarray) -> np.ndarray:
    """Filter signals via the recurrence T_0 f = f, T_1 f = L~ f,
    T_k f = 2 L~ T_{k-1} f - T_{k-2} f.

    `alpha` holds the r+1 polynomial coefficients; `f` is a single signal
    (n,) or one signal per column (n, d).
    """
    alpha = np.asarray(alpha, dtype=np.float64)
    if alpha.ndim != 1 or alpha.size < 1:
        raise ValueError(f"need a 1-D coefficient vector, got shape {alpha.shape}")
    if not np.all(np.isfinite(alpha)):
        raise ValueError("filter coefficients must be finite")
    if l_tilde.ndim != 2 or l_tilde.shape[0] != l_tilde.shape[1]:
        raise DimensionError(f"expected a square operator, got shape {l_tilde.shape}")
    f = np.asarray(f, dtype=np.float64)
    if f.ndim not in (1, 2) or f.shape[0] != l_tilde.shape[0]:
        raise DimensionError(
            f"signal shape {f.shape} does not match operator size {l_tilde.shape[0]}"
        )
    t_prev = f
    out = alpha[0] * f
    if alpha.size > 1:
        t_curr = l_tilde @ f
        out = out + alpha[1] * t_curr
        for k in range(2, alpha.size):
            t_next = 2.0 * (l_tilde @ t_curr) - t_prev
            out = out + alpha[k] * t_next
            t_prev, t_curr = t_curr, t_next
    return out
