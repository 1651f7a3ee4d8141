"""Kernel ridge regression and its Nystrom-restricted variant.

Both estimators minimise

    (1/n) sum_t (f(x_t) - y_t)^2 + lam * ||f||_K^2

over the full RKHS (``fit_krr``) or over the span of ``K(c_i, .)`` for the
chosen centers ``c_i`` (``fit_nystrom``). The Nystrom coefficients are

    alpha = (K_nm^T K_nm + lam * n * K_mm)^+ K_nm^T y

and the fitted function is ``f(x) = sum_i alpha_i K(c_i, x)`` with no
intercept. ``K_nm`` is never held in memory at once: rows are streamed in
blocks so the working set stays ``O(block * m + m^2)``.
"""

import io
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import DataError, InvalidArgumentError, NumericalError
from .kernels import KernelSpec, as_points, gram
from .linalg import as_symmetric, pinv_solve

# Max kernel entries materialised per streamed block (32 MB of float64).
BLOCK_ENTRIES = 1 << 22


def fit_cutoff(m):
    """Default pseudo-inverse cutoff for the ``m x m`` Nystrom system.

    The system matrix squares the conditioning of ``K_nm``, so a cutoff much
    above the eigensolver noise floor (``m * eps``) discards directions that
    carry signal.
    """
    return m * np.finfo(float).eps


@dataclass
class EmbeddedDataset:
    """Supervised pairs ``(x_i, y_i)`` with optional aligned noise.

    ``noise`` holds the additive noise contribution present in each target,
    so ``targets - noise`` is the noise-free part.
    """

    inputs: np.ndarray
    targets: np.ndarray
    noise: np.ndarray = None

    def __post_init__(self):
        self.inputs = as_points(self.inputs, "inputs")
        self.targets = np.asarray(self.targets, dtype=float).reshape(-1)
        if self.inputs.shape[0] != self.targets.shape[0]:
            raise InvalidArgumentError(
                f"inputs ({self.inputs.shape[0]}) and targets ({self.targets.shape[0]}) differ in length")
        if not (np.all(np.isfinite(self.inputs)) and np.all(np.isfinite(self.targets))):
            raise DataError("dataset contains non-finite values")
        if self.noise is not None:
            self.noise = np.asarray(self.noise, dtype=float).reshape(-1)
            if self.noise.shape != self.targets.shape:
                raise InvalidArgumentError("noise must align with targets")

    def __len__(self):
        return self.targets.shape[0]

    @property
    def d(self):
        return self.inputs.shape[1]

    @property
    def denoised_targets(self):
        if self.noise is None:
            raise InvalidArgumentError("dataset carries no noise; denoised targets unavailable")
        return self.targets - self.noise

    def subset(self, idx):
        idx = np.asarray(idx) if not isinstance(idx, slice) else idx
        return EmbeddedDataset(
            self.inputs[idx], self.targets[idx],
            None if self.noise is None else self.noise[idx])

    def head(self, k):
        return self.subset(slice(0, k))


@dataclass
class NystromModel:
    """Fitted estimator ``f(x) = sum_i alpha_i K(centers_i, x)``.

    ``transform`` is an optional affine min-max rescaling (keys ``x_min``,
    ``x_max``, ``y_min``, ``y_max``) applied to inputs before evaluation and
    undone on outputs, so predictions are in original units.
    """

    kernel: KernelSpec
    centers: np.ndarray
    alpha: np.ndarray
    lam: float
    meta: dict = field(default_factory=dict)
    transform: dict = None

    def __post_init__(self):
        self.centers = as_points(self.centers, "centers")
        self.alpha = np.asarray(self.alpha, dtype=float).reshape(-1)
        if self.alpha.shape[0] != self.centers.shape[0]:
            raise InvalidArgumentError("centers and alpha differ in length")
        if not np.all(np.isfinite(self.alpha)):
            raise NumericalError("fitted coefficients are not finite")
        if self.lam < 0:
            raise InvalidArgumentError(f"lambda must be >= 0, got {self.lam}")

    @property
    def m(self):
        return self.centers.shape[0]

    @property
    def d(self):
        return self.centers.shape[1]

    def predict(self, X):
        """Evaluate the model at each row of ``X``."""
        X = as_points(X, "query points")
        if X.shape[1] != self.d:
            raise InvalidArgumentError(
                f"query dimension {X.shape[1]} does not match model dimension {self.d}")
        if self.transform is not None:
            X = scale_inputs(X, self.transform)
        out = np.empty(X.shape[0])
        step = max(1, BLOCK_ENTRIES // self.m)
        for lo in range(0, X.shape[0], step):
            # row-wise sum rather than a BLAS product, so a point's prediction
            # does not depend on its position in the batch
            out[lo:lo + step] = (gram(self.kernel, X[lo:lo + step], self.centers) * self.alpha).sum(axis=1)
        if self.transform is not None:
            out = unscale_targets(out, self.transform)
        return out

    def rkhs_norm_sq(self):
        """``||f||_K^2 = alpha^T K_mm alpha``."""
        return float(self.alpha @ gram(self.kernel, self.centers, self.centers) @ self.alpha)


def predict(model, x):
    """Single-point prediction."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.ndim != 1:
        raise InvalidArgumentError("predict expects a single point; use model.predict for batches")
    return float(model.predict(x[None, :])[0])


def residuals(model, data):
    """``targets - model.predict(inputs)`` in order."""
    return data.targets - model.predict(data.inputs)


def objective(model, data):
    """Penalised empirical risk of ``model`` on ``data``."""
    r = residuals(model, data)
    return float(np.mean(r * r) + model.lam * model.rkhs_norm_sq())


# ---------------------------------------------------------------- scaling

def minmax_transform(data):
    x_min, x_max = float(data.inputs.min()), float(data.inputs.max())
    y_min, y_max = float(data.targets.min()), float(data.targets.max())
    if x_max == x_min or y_max == y_min:
        raise DataError("cannot rescale constant data")
    return {"x_min": x_min, "x_max": x_max, "y_min": y_min, "y_max": y_max}


def scale_inputs(X, t):
    return (X - t["x_min"]) / (t["x_max"] - t["x_min"])


def scale_targets(y, t):
    return (y - t["y_min"]) / (t["y_max"] - t["y_min"])


def unscale_targets(y, t):
    return y * (t["y_max"] - t["y_min"]) + t["y_min"]


def _rescaled(data, transform):
    if transform is None:
        return data
    return EmbeddedDataset(scale_inputs(data.inputs, transform), scale_targets(data.targets, transform))


# ---------------------------------------------------------------- fitting

def normal_equations(kernel, X, y, centers):
    """Stream ``K_nm`` in row blocks; return ``K_nm^T K_nm`` and ``K_nm^T y``."""
    m = centers.shape[0]
    A = np.zeros((m, m))
    b = np.zeros(m)
    step = max(1, BLOCK_ENTRIES // m)
    for lo in range(0, X.shape[0], step):
        Kb = gram(kernel, X[lo:lo + step], centers)
        A += Kb.T @ Kb
        b += Kb.T @ y[lo:lo + step]
    return A, b


def _check_idx(idx, n):
    idx = np.asarray(idx, dtype=np.int64).reshape(-1)
    if idx.size == 0:
        raise InvalidArgumentError("empty index set")
    if idx.min() < 0 or idx.max() >= n:
        raise InvalidArgumentError(f"index set out of range for dataset of size {n}")
    return idx


def fit_nystrom_path(data, kernel, lambdas, idx, cutoff=None, seed=None, rescale=False):
    """Fit one Nystrom model per value in ``lambdas`` sharing a single pass over the data."""
    kernel = KernelSpec.from_config(kernel)
    n = len(data)
    idx = _check_idx(idx, n)
    transform = minmax_transform(data) if rescale else None
    work = _rescaled(data, transform)
    centers = work.inputs[idx]
    m = idx.size
    if cutoff is None:
        cutoff = fit_cutoff(m)
    A, b = normal_equations(kernel, work.inputs, work.targets, centers)
    Kmm = gram(kernel, centers, centers)
    models = []
    for lam in lambdas:
        lam = float(lam)
        if lam < 0:
            raise InvalidArgumentError(f"lambda must be >= 0, got {lam}")
        alpha, rank = pinv_solve(A + lam * n * Kmm, b, cutoff, return_rank=True)
        meta = {"n": n, "m": m, "index": idx.tolist(), "seed": seed,
                "cutoff": cutoff, "rank": rank, "method": "nystrom"}
        models.append(NystromModel(kernel, centers.copy(), alpha, lam, meta, transform))
    return models


def fit_nystrom(data, kernel, lam, idx, cutoff=None, seed=None, rescale=False):
    """Nystrom-regularized KRR restricted to the centers ``data.inputs[idx]``.

    Parameters
    ----------
    data : EmbeddedDataset
    kernel : KernelSpec
    lam : float
        Regularization parameter, ``>= 0``. ``0`` is a diagnostic mode where
        the pseudo-inverse cutoff absorbs any rank deficiency.
    idx : array_like of int
        Positions of the retained columns (see :mod:`nystrom_ts.sampling`).
    cutoff : float, optional
        Relative eigenvalue cutoff of the pseudo-inverse, default ``m * eps``.
    seed : int, optional
        Recorded in ``meta`` only.
    rescale : bool
        Min-max rescale inputs and targets to [0, 1] before fitting.

    Returns
    -------
    NystromModel
    """
    return fit_nystrom_path(data, kernel, [lam], idx, cutoff, seed, rescale)[0]


def fit_krr(data, kernel, lam, rescale=False):
    """Full kernel ridge regression, ``alpha = (K + lam n I)^{-1} y``."""
    kernel = KernelSpec.from_config(kernel)
    lam = float(lam)
    if lam < 0:
        raise InvalidArgumentError(f"lambda must be >= 0, got {lam}")
    transform = minmax_transform(data) if rescale else None
    work = _rescaled(data, transform)
    n = len(work)
    K = as_symmetric(gram(kernel, work.inputs, work.inputs))
    K[np.diag_indices(n)] += lam * n
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("error", scipy.linalg.LinAlgWarning)
            alpha = scipy.linalg.solve(K, work.targets, assume_a="sym", check_finite=False)
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError, scipy.linalg.LinAlgWarning) as exc:
        raise NumericalError(
            f"KRR system of size {n} is singular or ill-conditioned at lambda={lam}; use lambda > 0"
        ) from exc
    meta = {"n": n, "m": n, "index": list(range(n)), "seed": None,
            "cutoff": None, "rank": n, "method": "krr"}
    return NystromModel(kernel, work.inputs.copy(), alpha, lam, meta, transform)


# ---------------------------------------------------------------- model files

_HEADER = "# nystrom_ts model v1"


def _fmt(v):
    return format(float(v), ".17g")


def dumps_model(model):
    """Serialise to the plain-text model format.

    Key-value lines ``key = value`` followed by a ``[centers]`` CSV block with
    columns ``x1..xd,alpha``. Floats use 17 significant digits so loading
    reproduces predictions bit for bit.
    """
    lines = [_HEADER,
             f"kernel.kind = {model.kernel.kind}"]
    if model.kernel.sigma is not None:
        lines.append(f"kernel.sigma = {_fmt(model.kernel.sigma)}")
    lines += [f"lambda = {_fmt(model.lam)}", f"m = {model.m}", f"d = {model.d}"]
    for key, val in model.meta.items():
        if val is None:
            continue
        if key == "index":
            val = ",".join(str(int(i)) for i in val)
        elif isinstance(val, float):
            val = _fmt(val)
        lines.append(f"meta.{key} = {val}")
    if model.transform is not None:
        for key in ("x_min", "x_max", "y_min", "y_max"):
            lines.append(f"transform.{key} = {_fmt(model.transform[key])}")
    lines.append("[centers]")
    lines.append(",".join([f"x{k + 1}" for k in range(model.d)] + ["alpha"]))
    for c, a in zip(model.centers, model.alpha):
        lines.append(",".join(_fmt(v) for v in c) + "," + _fmt(a))
    return "\n".join(lines) + "\n"


def _meta_value(key, raw):
    if key == "index":
        return [int(s) for s in raw.split(",")] if raw else []
    if key == "method":
        return raw
    try:
        return int(raw)
    except ValueError:
        return float(raw)


def loads_model(text):
    lines = text.splitlines()
    if not lines or lines[0].strip() != _HEADER:
        raise DataError("not a nystrom_ts model file (bad header on line 1)")
    kv = {}
    pos = 1
    while pos < len(lines) and lines[pos].strip() != "[centers]":
        line = lines[pos].strip()
        pos += 1
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise DataError(f"line {pos}: expected 'key = value'")
        key, val = (s.strip() for s in line.split("=", 1))
        kv[key] = val
    if pos >= len(lines):
        raise DataError("model file has no [centers] block")
    d = int(kv["d"])
    block = np.loadtxt(io.StringIO("\n".join(lines[pos + 2:])), delimiter=",", ndmin=2)
    if block.shape[1] != d + 1:
        raise DataError(f"[centers] block has {block.shape[1]} columns, expected {d + 1}")
    kernel = KernelSpec(kv["kernel.kind"], float(kv["kernel.sigma"]) if "kernel.sigma" in kv else None)
    meta = {k[5:]: _meta_value(k[5:], v) for k, v in kv.items() if k.startswith("meta.")}
    transform = None
    if "transform.x_min" in kv:
        transform = {k[10:]: float(v) for k, v in kv.items() if k.startswith("transform.")}
    return NystromModel(kernel, block[:, :d], block[:, d], float(kv["lambda"]), meta, transform)


def save_model(model, path):
    with open(path, "w") as fh:
        fh.write(dumps_model(model))


def load_model(path):
    with open(path) as fh:
        return loads_model(fh.read())
