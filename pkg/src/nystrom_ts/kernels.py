"""Mercer kernels and Gram-matrix assembly.

Three kernels are provided, all functions of the Euclidean distance or of
the raw scalar input:

* ``wendland``: ``(1 - r)^4 (4 r + 1)`` for ``r <= 1`` and 0 beyond, where
  ``r = ||x - x'||_2``. Compactly supported, ``K(x, x) = 1``.
* ``gaussian``: ``exp(-||x - x'||^2 / (2 sigma^2))``.
* ``minplusone``: ``1 + min(x, x')`` for scalar inputs. Positive
  semi-definite on ``x >= -1`` but not bounded by 1 (``bounded`` is False).

Entries are produced by one code path, so ``eval_kernel(k, x, y)`` equals
``gram(k, [x], [y])[0, 0]`` bit for bit and ``gram(k, A, B).T`` equals
``gram(k, B, A)`` exactly.
"""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError, UnsupportedKernelError

KINDS = ("wendland", "gaussian", "minplusone")


@dataclass(frozen=True)
class KernelSpec:
    """Kernel choice plus parameters.

    Parameters
    ----------
    kind : {"wendland", "gaussian", "minplusone"}
    sigma : float, optional
        Gaussian bandwidth. Required for ``gaussian``; ignored otherwise.
    """

    kind: str = "wendland"
    sigma: float = None

    def __post_init__(self):
        kind = str(self.kind).lower()
        if kind not in KINDS:
            raise UnsupportedKernelError(
                f"unknown kernel kind {self.kind!r}; expected one of {KINDS}")
        object.__setattr__(self, "kind", kind)
        if kind == "gaussian":
            if self.sigma is None or not np.isfinite(self.sigma) or self.sigma <= 0:
                raise InvalidArgumentError(
                    f"gaussian kernel needs sigma > 0, got {self.sigma!r}")
            object.__setattr__(self, "sigma", float(self.sigma))
        else:
            object.__setattr__(self, "sigma", None)

    @property
    def bounded(self):
        """True when ``sup_x K(x, x) <= 1``."""
        return self.kind != "minplusone"

    def to_config(self):
        out = {"kind": self.kind}
        if self.sigma is not None:
            out["sigma"] = self.sigma
        return out

    @classmethod
    def from_config(cls, cfg):
        if isinstance(cfg, KernelSpec):
            return cfg
        if isinstance(cfg, str):
            return cls(cfg)
        return cls(cfg.get("kind", "wendland"), cfg.get("sigma"))

    def __call__(self, rows, cols):
        return gram(self, rows, cols)


def as_points(X, name="points"):
    """Coerce to a float array of shape (n, d)."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 0:
        X = X.reshape(1, 1)
    elif X.ndim == 1:
        X = X[:, None]
    elif X.ndim != 2:
        raise InvalidArgumentError(f"{name} must be 1-D or 2-D, got shape {X.shape}")
    if X.shape[0] < 1 or X.shape[1] < 1:
        raise InvalidArgumentError(f"{name} is empty")
    return X


def _sq_dist(A, B):
    # Direct differences rather than the |a|^2 + |b|^2 - 2ab expansion: keeps
    # the result exactly symmetric and exactly zero on the diagonal.
    D = np.zeros((A.shape[0], B.shape[0]))
    for k in range(A.shape[1]):
        diff = A[:, k, None] - B[None, :, k]
        D += diff * diff
    return D


def gram(kernel, rows, cols):
    """Kernel block with entry ``(i, j) = K(rows[i], cols[j])``.

    Parameters
    ----------
    kernel : KernelSpec
    rows : array_like, shape (n, d) or (n,)
    cols : array_like, shape (m, d) or (m,)

    Returns
    -------
    ndarray, shape (n, m)
    """
    A = as_points(rows, "rows")
    B = as_points(cols, "cols")
    if A.shape[1] != B.shape[1]:
        raise InvalidArgumentError(
            f"dimension mismatch: rows have d={A.shape[1]}, cols have d={B.shape[1]}")
    if kernel.kind == "minplusone":
        if A.shape[1] != 1:
            raise UnsupportedKernelError(
                f"minplusone kernel is defined for scalar inputs only, got d={A.shape[1]}")
        return 1.0 + np.minimum(A[:, 0, None], B[None, :, 0])
    D2 = _sq_dist(A, B)
    if kernel.kind == "gaussian":
        return np.exp(-D2 / (2.0 * kernel.sigma ** 2))
    r = np.sqrt(D2)
    t = np.clip(1.0 - r, 0.0, None)
    t2 = t * t
    # rounding can lift values near r = 0 just above the true bound of 1
    return np.minimum(t2 * t2 * (4.0 * r + 1.0), 1.0)


def eval_kernel(kernel, x, xp):
    """Kernel value at a single pair of points."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    xp = np.atleast_1d(np.asarray(xp, dtype=float))
    if x.ndim != 1 or xp.ndim != 1:
        raise InvalidArgumentError("eval_kernel expects two single points")
    if x.shape != xp.shape:
        raise InvalidArgumentError(
            f"dimension mismatch: {x.shape[0]} vs {xp.shape[0]}")
    return float(gram(kernel, x[None, :], xp[None, :])[0, 0])
