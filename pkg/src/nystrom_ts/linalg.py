"""Dense symmetric eigendecomposition, pseudo-inverse solves and spectra."""

import csv
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import InvalidArgumentError, NumericalError


def as_symmetric(M):
    """Return ``(M + M.T) / 2`` as a float array after shape/finiteness checks."""
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] < 1:
        raise InvalidArgumentError(f"expected a non-empty square matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise InvalidArgumentError("matrix has non-finite entries")
    return 0.5 * (M + M.T)


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalues sorted in descending order."""

    eigenvalues: np.ndarray

    @property
    def dim(self):
        return len(self.eigenvalues)

    def top(self, k):
        return Spectrum(self.eigenvalues[:k])


def sym_eig(M):
    """Eigendecomposition of a symmetric matrix.

    Returns
    -------
    spectrum : Spectrum
        Eigenvalues, largest first.
    Q : ndarray
        Orthogonal matrix whose column ``i`` pairs with eigenvalue ``i``.
    """
    S = as_symmetric(M)
    try:
        w, Q = scipy.linalg.eigh(S, check_finite=False)
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError) as exc:
        raise NumericalError(
            f"symmetric eigensolver failed to converge on a {S.shape[0]}x{S.shape[0]} matrix"
        ) from exc
    order = np.argsort(w)[::-1]
    return Spectrum(w[order]), Q[:, order]


def eigvalsh_desc(M):
    """Eigenvalues only, descending (cheaper than :func:`sym_eig`)."""
    S = as_symmetric(M)
    try:
        w = scipy.linalg.eigh(S, eigvals_only=True, check_finite=False)
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError) as exc:
        raise NumericalError(
            f"symmetric eigensolver failed to converge on a {S.shape[0]}x{S.shape[0]} matrix"
        ) from exc
    return Spectrum(w[::-1].copy())


def default_cutoff(dim):
    return 1e-12 * dim


def pinv_solve(M, B, cutoff=None, return_rank=False):
    """Moore-Penrose solve ``M^+ B`` for symmetric ``M``.

    Eigenvalues with ``|w_i| <= cutoff * max_j |w_j|`` are treated as zero.
    ``cutoff`` defaults to ``1e-12 * dim``.

    Parameters
    ----------
    M : array_like, shape (dim, dim)
    B : array_like, shape (dim,) or (dim, p)
    cutoff : float, optional
    return_rank : bool
        Also return the number of retained eigenvalues.
    """
    S = as_symmetric(M)
    B = np.asarray(B, dtype=float)
    if B.shape[0] != S.shape[0]:
        raise InvalidArgumentError(
            f"shape mismatch: matrix is {S.shape[0]}x{S.shape[0]}, right-hand side has {B.shape[0]} rows")
    if cutoff is None:
        cutoff = default_cutoff(S.shape[0])
    if not 0 < cutoff < 1:
        raise InvalidArgumentError(f"cutoff must lie in (0, 1), got {cutoff}")
    spec, Q = sym_eig(S)
    w = spec.eigenvalues
    wmax = np.max(np.abs(w))
    keep = np.abs(w) > cutoff * wmax if wmax > 0 else np.zeros_like(w, dtype=bool)
    inv = np.zeros_like(w)
    inv[keep] = 1.0 / w[keep]
    QtB = Q.T @ B
    X = Q @ (inv[:, None] * QtB if B.ndim == 2 else inv * QtB)
    if return_rank:
        return X, int(keep.sum())
    return X


def effective_rank(spectrum, threshold):
    """Number of eigenvalues strictly greater than ``threshold``."""
    if not threshold > 0:
        raise InvalidArgumentError(f"threshold must be positive, got {threshold}")
    w = spectrum.eigenvalues if isinstance(spectrum, Spectrum) else np.asarray(spectrum)
    return int(np.count_nonzero(w > threshold))


def write_spectrum_csv(path, spectrum):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["index", "eigenvalue"])
        for i, v in enumerate(spectrum.eigenvalues):
            w.writerow([i, f"{v:.17g}"])


def read_spectrum_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return Spectrum(np.array([float(r["eigenvalue"]) for r in rows]))
