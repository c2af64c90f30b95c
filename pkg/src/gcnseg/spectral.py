"""Dense symmetric eigendecomposition and exact spectral filtering.

This is the deliberately slow, trustworthy path: a cyclic Jacobi
eigensolver plus filtering through the full eigenbasis.  Faster
polynomial filtering is checked against it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, NumericalFailure

# Absolute off-diagonal Frobenius threshold; adequate for the O(1)-scale
# matrices this oracle is meant for (Laplacians of small test graphs).
JACOBI_TOL = 1e-12
JACOBI_MAX_SWEEPS = 100
ORACLE_NODE_LIMIT = 4096
SYMMETRY_TOL = 1e-12


@dataclass(frozen=True)
class SpectralDecomposition:
    """Orthonormal eigenvector columns `phi` and ascending eigenvalues `lam`."""

    phi: np.ndarray
    lam: np.ndarray

    @property
    def n(self) -> int:
        return self.lam.shape[0]


def _offdiag_fro(a: np.ndarray) -> float:
    # Summed directly (not total minus diagonal) so cancellation noise
    # cannot put a floor under the measured norm.
    off = a.copy()
    np.fill_diagonal(off, 0.0)
    return float(np.sqrt(np.sum(off * off)))


def eig_sym(m: np.ndarray, tol: float = JACOBI_TOL,
            max_n: int = ORACLE_NODE_LIMIT) -> SpectralDecomposition:
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Sweeps until the off-diagonal Frobenius norm drops below `tol`
    (at most JACOBI_MAX_SWEEPS sweeps).  Eigenvalues are sorted ascending
    with a stable sort; each eigenvector's first nonzero component is made
    nonnegative so results are reproducible.
    """
    a = np.array(m, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {a.shape}")
    n = a.shape[0]
    if n > max_n:
        raise DimensionError(f"matrix size {n} exceeds the oracle limit {max_n}")
    asym = float(np.max(np.abs(a - a.T))) if n > 1 else 0.0
    if asym > SYMMETRY_TOL:
        raise ValueError(f"matrix is not symmetric (max |m - m^T| = {asym:.3e})")

    v = np.eye(n)
    for _ in range(JACOBI_MAX_SWEEPS):
        if _offdiag_fro(a) < tol:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                # Entries below float resolution relative to the diagonal
                # cannot be rotated away; zero them so sweeps make progress.
                if abs(a[p, p]) + 100.0 * abs(apq) == abs(a[p, p]) and \
                        abs(a[q, q]) + 100.0 * abs(apq) == abs(a[q, q]):
                    a[p, q] = 0.0
                    a[q, p] = 0.0
                    continue
                # Rotation angle that annihilates a[p, q]; the smaller-root
                # formula keeps |t| <= 1 for stability.
                tau = (a[q, q] - a[p, p]) / (2.0 * apq)
                if abs(tau) > 1.0e150:
                    t = 1.0 / (2.0 * tau)
                elif tau >= 0.0:
                    t = 1.0 / (tau + np.sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + np.sqrt(1.0 + tau * tau))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c

                col_p = a[:, p].copy()
                col_q = a[:, q].copy()
                a[:, p] = c * col_p - s * col_q
                a[:, q] = s * col_p + c * col_q
                row_p = a[p, :].copy()
                row_q = a[q, :].copy()
                a[p, :] = c * row_p - s * row_q
                a[q, :] = s * row_p + c * row_q
                a[p, q] = 0.0
                a[q, p] = 0.0

                vec_p = v[:, p].copy()
                vec_q = v[:, q].copy()
                v[:, p] = c * vec_p - s * vec_q
                v[:, q] = s * vec_p + c * vec_q
    else:
        if _offdiag_fro(a) >= tol:
            raise NumericalFailure(
                f"Jacobi sweeps did not converge after {JACOBI_MAX_SWEEPS} sweeps "
                f"(off-diagonal norm {_offdiag_fro(a):.3e} >= {tol:.3e})"
            )

    lam = np.diag(a).copy()
    order = np.argsort(lam, kind="stable")
    lam = lam[order]
    phi = v[:, order]
    for k in range(n):
        nz = np.nonzero(phi[:, k])[0]
        if nz.size and phi[nz[0], k] < 0.0:
            phi[:, k] = -phi[:, k]
    return SpectralDecomposition(phi=phi, lam=lam)


def graph_fourier(dec: SpectralDecomposition, f: np.ndarray) -> np.ndarray:
    """Project a node signal onto the eigenbasis (phi^T f)."""
    f = np.asarray(f, dtype=np.float64)
    if f.shape[0] != dec.n:
        raise DimensionError(f"signal length {f.shape[0]} != n={dec.n}")
    return dec.phi.T @ f


def spectral_filter(dec: SpectralDecomposition, g_hat: np.ndarray,
                    f: np.ndarray) -> np.ndarray:
    """Apply per-frequency gains exactly: phi diag(g_hat) phi^T f.

    `f` may be a single signal (n,) or one signal per column (n, d).
    """
    g_hat = np.asarray(g_hat, dtype=np.float64)
    f = np.asarray(f, dtype=np.float64)
    if g_hat.ndim != 1 or g_hat.shape[0] != dec.n:
        raise DimensionError(f"need {dec.n} spectral multipliers, got shape {g_hat.shape}")
    if f.ndim not in (1, 2) or f.shape[0] != dec.n:
        raise DimensionError(f"signal shape {f.shape} does not match n={dec.n}")
    coeff = dec.phi.T @ f
    if f.ndim == 1:
        return dec.phi @ (g_hat * coeff)
    return dec.phi @ (g_hat[:, None] * coeff)
