"""Evaluation harnesses: one-step forecasting, forward-chaining validation,
sub-sampling sweeps, placement studies, spectrum comparison and the
noise-extractor report.

Every sweep is driven by a master seed. Trial ``r`` draws its data from
``derive_seed(seed, "trial", r)``, so all points of a sweep see the same
``reps`` realisations (a paired design) and any row can be re-run alone from
its recorded ``seed``.
"""

import csv
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgumentError
from .estimator import EmbeddedDataset, fit_krr, fit_nystrom, fit_nystrom_path, fit_cutoff
from .kernels import KernelSpec, gram
from .linalg import effective_rank, eigvalsh_desc, pinv_solve
from .sampling import SubsampleSpec, resolve
from .seeding import derive_seed, make_rng
from .timeseries import NoiseSpec, embed, gen_nar

# Largest full Gram matrix (entries) kept in memory during per-step refits.
GRAM_CACHE_ENTRIES = 1 << 23


def rmse(pred, truth):
    """Root mean squared error."""
    pred = np.asarray(pred, dtype=float).reshape(-1)
    truth = np.asarray(truth, dtype=float).reshape(-1)
    if pred.size == 0 or pred.shape != truth.shape:
        raise InvalidArgumentError(f"rmse needs equal non-empty lengths, got {pred.size} and {truth.size}")
    diff = pred - truth
    return float(np.sqrt(np.mean(diff * diff)))


def lambda_grid(lo, step, hi):
    """Inclusive grid ``lo, lo+step, ..., <= hi`` (``[lo:step:hi]`` notation)."""
    if step <= 0 or hi < lo:
        raise InvalidArgumentError(f"bad grid [{lo}:{step}:{hi}]")
    count = int(np.floor((hi - lo) / step + 1e-9)) + 1
    return [float(f"{lo + i * step:.12g}") for i in range(count)]


# Reference lambda grids, keyed by (mechanism, experiment, n_train).
REFERENCE_GRIDS = {
    ("m1", "ratio", 2000): lambda_grid(5e-4, 5e-4, 0.01),
    ("m2", "ratio", 2000): lambda_grid(5e-4, 5e-5, 0.001),
    ("m1", "placement", 2000): lambda_grid(5e-4, 5e-4, 0.01),
    ("m1", "placement", 10000): lambda_grid(5e-5, 1e-4, 0.001),
    ("m2", "placement", 2000): lambda_grid(5e-4, 5e-5, 0.001),
    ("m2", "placement", 10000): lambda_grid(1e-4, 2e-5, 4e-4),
    ("m1", "scaling", None): lambda_grid(2e-4, 2e-4, 0.004),
    ("m2", "scaling", None): lambda_grid(1e-4, 1e-5, 2e-4),
}


# ---------------------------------------------------------------- data

@dataclass(frozen=True)
class Mechanism:
    """Synthetic data source.

    ``x0=None`` draws the initial state from U(0, 1) using the trial seed.
    """

    map_id: str = "m1"
    noise: NoiseSpec = NoiseSpec.uniform(-0.7, 0.7)
    d: int = 1
    x0: float = None
    burn_in: int = 0

    @classmethod
    def m1(cls, noise=None, **kw):
        return cls("m1", noise or NoiseSpec.uniform(-0.7, 0.7), **kw)

    @classmethod
    def m2(cls, **kw):
        return cls("m2", NoiseSpec.bernoulli(0.5), **kw)

    def generate(self, length, seed):
        rng = make_rng(seed, "x0")
        x_init = [rng.uniform(0.0, 1.0) if self.x0 is None else self.x0] * self.d
        return gen_nar(self.map_id, self.d, self.noise, length, x_init,
                       seed=derive_seed(seed, "noise"), burn_in=self.burn_in)

    def split(self, n_train, n_test, seed):
        """Train/test datasets of ``n_train`` and ``n_test`` embedded pairs."""
        g = self.generate(n_train + n_test + self.d, seed)
        data = embed(g, self.d)
        return data.head(n_train), data.subset(slice(n_train, n_train + n_test))

    def to_config(self):
        return {"map": self.map_id, "noise": self.noise.to_config(), "d": self.d,
                "x0": self.x0, "burn_in": self.burn_in}

    @classmethod
    def from_config(cls, cfg):
        if isinstance(cfg, Mechanism):
            return cfg
        cfg = dict(cfg)
        map_id = cfg.get("map", "m1")
        default_noise = NoiseSpec.bernoulli(0.5) if map_id == "m2" else NoiseSpec.uniform(-0.7, 0.7)
        noise = NoiseSpec.from_config(cfg["noise"]) if "noise" in cfg else default_noise
        x0 = cfg.get("x0")
        return cls(map_id, noise, int(cfg.get("d", 1)), None if x0 is None else float(x0),
                   int(cfg.get("burn_in", 0)))


# ---------------------------------------------------------------- evaluation

@dataclass(frozen=True)
class EvalProtocol:
    """One-step evaluation settings.

    ``refit="per-step"`` refits before every test point on all samples seen
    so far; ``"once"`` fits a single model on the training set. ``target``
    is ``"noisy"`` (observed values) or ``"denoised"`` (observed minus the
    noise contribution).
    """

    refit: str = "per-step"
    target: str = "denoised"

    def __post_init__(self):
        if self.refit not in ("per-step", "once"):
            raise InvalidArgumentError(f"refit must be 'per-step' or 'once', got {self.refit!r}")
        if self.target not in ("noisy", "denoised"):
            raise InvalidArgumentError(f"target must be 'noisy' or 'denoised', got {self.target!r}")


class _GrowingSystem:
    """Normal equations of a growing training prefix, updated one row at a time.

    Holds the full Gram matrix ``K`` of every input plus ``G = K_p^T K_p`` and
    ``K_p^T y`` for the current prefix ``p``, so the Nystrom system for any
    center set is a submatrix slice instead of a fresh ``O(n m^2)`` product.
    """

    def __init__(self, kernel, X, y, n0):
        self.K = gram(kernel, X, X)
        self.y = y
        self.n = n0
        self.G = self.K[:n0].T @ self.K[:n0]
        self.b = self.K[:n0].T @ y[:n0]

    def grow(self):
        row = self.K[self.n]
        self.G += np.outer(row, row)
        self.b += row * self.y[self.n]
        self.n += 1

    def fit(self, idx, lam, cutoff):
        ix = np.ix_(idx, idx)
        return pinv_solve(self.G[ix] + lam * self.n * self.K[ix], self.b[idx], cutoff)


def _fit(train, kernel, lam, spec, seed):
    if spec is None:
        return fit_krr(train, kernel, lam)
    idx = resolve(spec, len(train), make_rng(seed, "subsample"))
    return fit_nystrom(train, kernel, lam, idx, seed=seed)


def one_step_eval(train, test, kernel, lam, spec, protocol=EvalProtocol(), seed=0):
    """One-step-ahead forecasting error.

    Test point ``k`` (0-based) is predicted by a model fitted on the
    ``len(train) + k`` samples preceding it when ``protocol.refit`` is
    ``"per-step"``; the sub-sample is re-resolved for every grown size with
    seed ``derive_seed(seed, "step", k)``. ``spec=None`` fits full KRR.

    Returns
    -------
    rmse : float
    predictions : ndarray
    """
    kernel = KernelSpec.from_config(kernel)
    if len(test) == 0:
        raise InvalidArgumentError("empty test set")
    truth = test.targets if protocol.target == "noisy" else test.denoised_targets
    if protocol.refit == "once":
        model = _fit(train, kernel, lam, spec, seed)
        preds = model.predict(test.inputs)
        return rmse(preds, truth), preds

    N = len(train)
    X = np.vstack([train.inputs, test.inputs])
    y = np.concatenate([train.targets, test.targets])
    full = EmbeddedDataset(X, y)
    T = len(test)
    system = None
    if spec is not None:
        m = spec.size_for(N + T - 1)
        # Worth it only when repeated O(n m^2) products outweigh one O(n^3) setup.
        if X.shape[0] ** 2 <= GRAM_CACHE_ENTRIES and T * m * m > X.shape[0] ** 2:
            system = _GrowingSystem(kernel, X, y, N)
    preds = np.empty(T)
    for k in range(T):
        step_seed = derive_seed(seed, "step", k) if k else seed
        n_k = N + k
        if system is not None:
            while system.n < n_k:
                system.grow()
            idx = resolve(spec, n_k, make_rng(step_seed, "subsample"))
            alpha = system.fit(idx, lam, fit_cutoff(idx.size))
            preds[k] = system.K[n_k, idx] @ alpha
        else:
            model = _fit(full.head(n_k), kernel, lam, spec, step_seed)
            preds[k] = model.predict(X[n_k][None, :])[0]
    return rmse(preds, truth), preds


@dataclass
class CVResult:
    best_lambda: float
    lambdas: list
    scores: list
    fit_indices: np.ndarray
    val_indices: np.ndarray


def cross_validate(train, kernel, lambda_grid, spec, holdout_fraction=0.2, seed=0):
    """Forward-chaining holdout choice of ``lam``.

    The first ``n - v`` samples fit, the last ``v = max(1, floor(f n))``
    validate; never shuffled. Each value is scored by validation RMSE against
    the observed targets; ties go to the larger value.
    """
    kernel = KernelSpec.from_config(kernel)
    grid = [float(v) for v in lambda_grid]
    if not grid:
        raise InvalidArgumentError("empty lambda grid")
    if not 0 < holdout_fraction <= 0.5:
        raise InvalidArgumentError(f"holdout_fraction must lie in (0, 0.5], got {holdout_fraction}")
    n = len(train)
    v = max(1, int(np.floor(holdout_fraction * n)))
    if n - v < 1:
        raise InvalidArgumentError(f"dataset of size {n} too small to split")
    fit_idx = np.arange(n - v)
    val_idx = np.arange(n - v, n)
    head, tail = train.subset(fit_idx), train.subset(val_idx)
    uniq = sorted(set(grid))
    if spec is None:
        models = [fit_krr(head, kernel, lam) for lam in uniq]
    else:
        idx = resolve(spec, len(head), make_rng(seed, "cv"))
        models = fit_nystrom_path(head, kernel, uniq, idx, seed=seed)
    score_of = {lam: rmse(mdl.predict(tail.inputs), tail.targets) for lam, mdl in zip(uniq, models)}
    best = min(uniq, key=lambda lam: (score_of[lam], -lam))
    return CVResult(best, grid, [score_of[lam] for lam in grid], fit_idx, val_idx)


# ---------------------------------------------------------------- sweeps

ROW_FIELDS = ("label", "n", "m", "lambda", "seed", "rmse", "runtime_s")


@dataclass
class SweepResult:
    """Per-trial rows plus per-axis-point aggregates."""

    axis: list
    rmse_mean: list
    rmse_std: list
    runtime: list
    rows: list = field(default_factory=list)
    slope: float = None

    @classmethod
    def from_rows(cls, axis, rows, key):
        means, stds, times = [], [], []
        for a in axis:
            sel = [r for r in rows if r[key] == a]
            vals = np.array([r["rmse"] for r in sel])
            means.append(float(vals.mean()))
            stds.append(float(vals.std()))
            times.append(float(sum(r["runtime_s"] for r in sel)))
        return cls(list(axis), means, stds, times, rows)

    def as_dict(self):
        return {a: m for a, m in zip(self.axis, self.rmse_mean)}

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(ROW_FIELDS)
            for r in self.rows:
                w.writerow([r["label"], r["n"], r["m"], format(r["lambda"], ".17g"), r["seed"],
                            format(r["rmse"], ".17g"), format(r["runtime_s"], ".6g")])


@dataclass(frozen=True)
class TrialTask:
    mechanism: Mechanism
    n: int
    n_test: int
    kernel: KernelSpec
    spec: SubsampleSpec
    lambdas: tuple
    protocol: EvalProtocol
    seed: int
    label: str
    holdout_fraction: float = 0.2


def run_trial(task):
    """Generate, select ``lam`` (when a grid is given), fit and evaluate."""
    t0 = time.perf_counter()
    train, test = task.mechanism.split(task.n, task.n_test, task.seed)
    if len(task.lambdas) == 1:
        lam = task.lambdas[0]
    else:
        lam = cross_validate(train, task.kernel, task.lambdas, task.spec,
                             task.holdout_fraction, derive_seed(task.seed, "cv")).best_lambda
    err, _ = one_step_eval(train, test, task.kernel, lam, task.spec, task.protocol,
                           derive_seed(task.seed, "eval"))
    m = task.n if task.spec is None else task.spec.size_for(task.n)
    return {"label": task.label, "n": task.n, "m": m, "lambda": lam, "seed": task.seed,
            "rmse": err, "runtime_s": time.perf_counter() - t0}


def run_tasks(tasks, jobs=1):
    """Run trials, optionally in a process pool; output keeps task order."""
    if jobs is None or jobs <= 1 or len(tasks) <= 1:
        return [run_trial(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(run_trial, tasks))


def trial_seed(seed, rep):
    return derive_seed(seed, "trial", rep)


def _lambdas(lambdas):
    if np.isscalar(lambdas):
        return (float(lambdas),)
    return tuple(float(v) for v in lambdas)


def ratio_sweep(mechanism, n, ratios, lambdas, reps=5, seed=0, kernel=KernelSpec(),
                n_test=50, protocol=EvalProtocol(), mode="random", jobs=1, include_krr=False):
    """RMSE against the sub-sampling ratio ``m / n``.

    ``lambdas`` is a fixed value or a grid searched by :func:`cross_validate`
    inside every trial. ``include_krr`` appends a full-KRR point labelled
    ``"krr"`` on the same trials.
    """
    if reps < 1:
        raise InvalidArgumentError("reps must be >= 1")
    tasks = []
    for ratio in ratios:
        if not 0 < ratio <= 1:
            raise InvalidArgumentError(f"ratio must lie in (0, 1], got {ratio}")
        spec = SubsampleSpec(mode, ratio=ratio)
        for r in range(reps):
            tasks.append(TrialTask(mechanism, n, n_test, kernel, spec, _lambdas(lambdas),
                                   protocol, trial_seed(seed, r), f"ratio={ratio:g}"))
    axis = list(ratios)
    if include_krr:
        for r in range(reps):
            tasks.append(TrialTask(mechanism, n, n_test, kernel, None, _lambdas(lambdas),
                                   protocol, trial_seed(seed, r), "krr"))
    rows = run_tasks(tasks, jobs)
    for row, t in zip(rows, tasks):
        row["axis"] = "krr" if t.spec is None else t.spec.ratio
    if include_krr:
        axis.append("krr")
    return SweepResult.from_rows(axis, rows, "axis")


def loglog_slope(ns, values):
    """Least-squares slope of ``log(values)`` on ``log(ns)``; None for one point."""
    if len(ns) < 2:
        return None
    return float(np.polyfit(np.log(ns), np.log(values), 1)[0])


def scaling_sweep(mechanism, ns, ratio, lambdas, reps=5, seed=0, kernel=KernelSpec(),
                  n_test=10, protocol=EvalProtocol(), mode="random", jobs=1):
    """RMSE against training size at a fixed ratio, with the log-log slope."""
    ns = [int(v) for v in ns]
    if any(b <= a for a, b in zip(ns, ns[1:])):
        raise InvalidArgumentError("ns must be strictly increasing")
    if not 0 < ratio <= 1:
        raise InvalidArgumentError(f"ratio must lie in (0, 1], got {ratio}")
    spec = SubsampleSpec(mode, ratio=ratio)
    tasks = [TrialTask(mechanism, n, n_test, kernel, spec, _lambdas(lambdas), protocol,
                       trial_seed(seed, r), f"n={n}") for n in ns for r in range(reps)]
    rows = run_tasks(tasks, jobs)
    res = SweepResult.from_rows(ns, rows, "n")
    res.slope = loglog_slope(ns, res.rmse_mean)
    return res


def placement_specs(m, positions=("first", "middle", "last"), gaps=(), start=0):
    specs = [SubsampleSpec(p, m=m) for p in positions]
    specs += [SubsampleSpec("strided", m=m, start=start, gap=int(k)) for k in gaps]
    return specs


def placement_study(mechanism, n, m, positions=("first", "middle", "last"), gaps=(5, 20),
                    lambdas=0.001, reps=5, seed=0, kernel=KernelSpec(), n_test=5,
                    protocol=EvalProtocol(), jobs=1):
    """RMSE per sub-sampling placement (First/Middle/Last and Intv.k).

    Strided sets start at 0. Infeasible strides are rejected up front.
    """
    specs = placement_specs(m, positions, gaps)
    for s in specs:
        try:
            resolve(s, n)
        except InvalidArgumentError as exc:
            raise InvalidArgumentError(f"strategy {s.label} infeasible for n={n}, m={m}: {exc}") from exc
    tasks = [TrialTask(mechanism, n, n_test, kernel, s, _lambdas(lambdas), protocol,
                       trial_seed(seed, r), s.label) for s in specs for r in range(reps)]
    rows = run_tasks(tasks, jobs)
    return SweepResult.from_rows([s.label for s in specs], rows, "label")


def relative_spread(values):
    """``(max - min) / min`` of a list of positive values."""
    v = np.asarray(values, dtype=float)
    return float((v.max() - v.min()) / v.min())


# ---------------------------------------------------------------- spectra

@dataclass(frozen=True)
class IIDDesign:
    """I.i.d. inputs drawn uniformly on ``[low, high]``.

    With ``low``/``high`` left as None the interval is the range of the
    paired dependent arm's inputs, so both arms share a support.
    """

    low: float = None
    high: float = None

    def sample(self, n, d, seed, ref=None):
        lo = self.low if self.low is not None else float(ref.min())
        hi = self.high if self.high is not None else float(ref.max())
        return make_rng(seed, "iid").uniform(lo, hi, (n, d))


@dataclass
class SpectrumComparison:
    dependent: list
    iid: list
    rank_dependent: list
    rank_iid: list
    thresholds: list
    seeds: list

    def fraction_ordered(self):
        pairs = list(zip(self.rank_dependent, self.rank_iid))
        return sum(a <= b for a, b in pairs) / len(pairs)


def gram_spectrum(kernel, X, top_k):
    return eigvalsh_desc(gram(kernel, X, X)).top(top_k)


def spectrum_compare(kernel, n, top_k, dependent=Mechanism.m1(NoiseSpec.bernoulli(0.5)),
                     iid=IIDDesign(), threshold=1e-3, seeds=range(5)):
    """Gram spectra of a dependent series versus i.i.d. inputs, per seed.

    ``dependent`` is a :class:`Mechanism` whose embedded inputs form the
    first Gram matrix; ``iid`` is an :class:`IIDDesign` or another
    ``Mechanism``. ``threshold`` is relative to each matrix's largest
    eigenvalue.
    """
    kernel = KernelSpec.from_config(kernel)
    if top_k > n:
        raise InvalidArgumentError(f"top_k={top_k} exceeds n={n}")
    out = SpectrumComparison([], [], [], [], [], list(seeds))
    for s in out.seeds:
        Xd = embed(dependent.generate(n + dependent.d, s), dependent.d).inputs
        if isinstance(iid, Mechanism):
            Xi = embed(iid.generate(n + iid.d, s), iid.d).inputs
        else:
            Xi = iid.sample(n, Xd.shape[1], s, ref=Xd)
        sd = eigvalsh_desc(gram(kernel, Xd, Xd))
        si = eigvalsh_desc(gram(kernel, Xi, Xi))
        out.dependent.append(sd.top(top_k))
        out.iid.append(si.top(top_k))
        out.rank_dependent.append(effective_rank(sd, threshold * sd.eigenvalues[0]))
        out.rank_iid.append(effective_rank(si, threshold * si.eigenvalues[0]))
        out.thresholds.append((threshold * sd.eigenvalues[0], threshold * si.eigenvalues[0]))
    return out


# ---------------------------------------------------------------- noise

@dataclass
class NoiseReport:
    residuals: np.ndarray
    edges: np.ndarray
    counts: np.ndarray
    mean: float
    variance: float
    reference: dict = None

    @property
    def std(self):
        return float(np.sqrt(self.variance))

    def write(self, hist_path, summary_path):
        with open(hist_path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["bin_left", "bin_right", "count"])
            for lo, hi, c in zip(self.edges[:-1], self.edges[1:], self.counts):
                w.writerow([format(lo, ".17g"), format(hi, ".17g"), int(c)])
        lines = [f"count = {self.residuals.size}", f"mean = {self.mean:.17g}",
                 f"variance = {self.variance:.17g}", f"std = {self.std:.17g}"]
        for k, v in (self.reference or {}).items():
            lines.append(f"reference.{k} = {v:.17g}")
        with open(summary_path, "w") as fh:
            fh.write("\n".join(lines) + "\n")


def noise_report(model, heldout, true_noise=None, bin_count=20):
    """Residual distribution of ``model`` on ``heldout`` against noisy targets.

    With ``true_noise`` the report adds its mean and variance and the largest
    gap between the two empirical CDFs at the histogram edges.
    """
    if len(heldout) == 0:
        raise InvalidArgumentError("empty held-out set")
    if bin_count < 2:
        raise InvalidArgumentError(f"bin_count must be >= 2, got {bin_count}")
    r = heldout.targets - model.predict(heldout.inputs)
    lo, hi = float(r.min()), float(r.max())
    if lo == hi:
        lo, hi = lo - 0.5, hi + 0.5
    counts, edges = np.histogram(r, bins=bin_count, range=(lo, hi))
    ref = None
    if true_noise is not None:
        e = np.asarray(true_noise, dtype=float)
        rs, es = np.sort(r), np.sort(e)
        gap = max(abs(np.searchsorted(rs, t, "right") / rs.size - np.searchsorted(es, t, "right") / es.size)
                  for t in edges)
        ref = {"mean": float(e.mean()), "variance": float(e.var()), "cdf_gap": float(gap)}
    return NoiseReport(r, edges, counts, float(r.mean()), float(r.var()), ref)


def noise_extraction(mechanism, n_train=2000, n_heldout=2000, ratio=0.01, lam=0.005,
                     kernel=KernelSpec(), seed=0, bin_count=20, mode="random"):
    """Fit on ``n_train`` samples and report residuals on the next ``n_heldout``."""
    train, held = mechanism.split(n_train, n_heldout, seed)
    spec = SubsampleSpec(mode, ratio=ratio)
    model = _fit(train, kernel, lam, spec, derive_seed(seed, "fit"))
    return model, noise_report(model, held, held.noise, bin_count)
