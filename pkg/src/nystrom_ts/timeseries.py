"""Synthetic mixing processes, delay embedding, noise sampling and the ACF.

Generated series exclude the initial state: for ``x_t = f(x_{t-1}) + e_t``
the returned values are ``x_1, ..., x_n`` given ``x_0``, and ``noise[t]`` is
the ``e`` that entered ``values[t]``.

``innovation`` is the part of each value contributed by its noise draw,
``x_t - f(lags; e=0)``. It equals ``noise`` for additive maps and ``e_t / 2``
for the halving Bernoulli chain, where the noise sits inside the map.
"""

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, DegenerateInputError, InvalidArgumentError
from .estimator import EmbeddedDataset
from .seeding import make_rng

NOISE_KINDS = ("bernoulli", "uniform", "gaussian", "zero")


@dataclass(frozen=True)
class NoiseSpec:
    """I.i.d. noise law.

    ``bernoulli`` uses ``p``; ``uniform`` uses ``low < high``; ``gaussian``
    uses ``mu`` and ``sigma > 0``; ``zero`` draws nothing and returns zeros.
    """

    kind: str = "uniform"
    p: float = 0.5
    low: float = -0.7
    high: float = 0.7
    mu: float = 0.0
    sigma: float = 0.1

    def __post_init__(self):
        if self.kind not in NOISE_KINDS:
            raise InvalidArgumentError(f"unknown noise kind {self.kind!r}; expected one of {NOISE_KINDS}")
        if self.kind == "bernoulli" and not 0 <= self.p <= 1:
            raise InvalidArgumentError(f"bernoulli p must lie in [0, 1], got {self.p}")
        if self.kind == "uniform" and not self.low < self.high:
            raise InvalidArgumentError(f"uniform noise needs low < high, got ({self.low}, {self.high})")
        if self.kind == "gaussian" and not self.sigma > 0:
            raise InvalidArgumentError(f"gaussian noise needs sigma > 0, got {self.sigma}")

    @classmethod
    def bernoulli(cls, p=0.5):
        return cls("bernoulli", p=p)

    @classmethod
    def uniform(cls, low, high):
        return cls("uniform", low=low, high=high)

    @classmethod
    def gaussian(cls, mu=0.0, sigma=0.1):
        return cls("gaussian", mu=mu, sigma=sigma)

    @classmethod
    def zero(cls):
        return cls("zero")

    @property
    def mean(self):
        return {"bernoulli": self.p, "uniform": 0.5 * (self.low + self.high),
                "gaussian": self.mu, "zero": 0.0}[self.kind]

    @property
    def variance(self):
        return {"bernoulli": self.p * (1 - self.p), "uniform": (self.high - self.low) ** 2 / 12,
                "gaussian": self.sigma ** 2, "zero": 0.0}[self.kind]

    def to_config(self):
        keys = {"bernoulli": ("p",), "uniform": ("low", "high"),
                "gaussian": ("mu", "sigma"), "zero": ()}[self.kind]
        return {"kind": self.kind, **{k: getattr(self, k) for k in keys}}

    @classmethod
    def from_config(cls, cfg):
        if isinstance(cfg, NoiseSpec):
            return cfg
        cfg = dict(cfg)
        kind = cfg.pop("kind", "uniform")
        return cls(kind, **{k: float(v) for k, v in cfg.items()})


def sample_noise(spec, n, seed=None):
    """``n`` i.i.d. draws from ``spec``; deterministic given ``seed``."""
    if n < 0:
        raise InvalidArgumentError(f"n must be >= 0, got {n}")
    if spec.kind == "zero":
        return np.zeros(n)
    rng = make_rng(seed)
    if spec.kind == "bernoulli":
        return (rng.random(n) < spec.p).astype(float)
    if spec.kind == "uniform":
        return rng.uniform(spec.low, spec.high, n)
    return rng.normal(spec.mu, spec.sigma, n)


@dataclass
class Series:
    values: np.ndarray
    origin: str = "memory"

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float).reshape(-1)
        if self.values.size < 1:
            raise InvalidArgumentError("series is empty")
        if not np.all(np.isfinite(self.values)):
            raise DataError("series contains non-finite values")

    def __len__(self):
        return self.values.size


@dataclass
class GeneratedSeries:
    series: Series
    noise: np.ndarray
    innovation: np.ndarray = None
    mechanism: str = ""
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.noise = np.asarray(self.noise, dtype=float)
        if self.innovation is None:
            self.innovation = self.noise
        if not (self.noise.shape == self.innovation.shape == self.series.values.shape):
            raise InvalidArgumentError("series, noise and innovation lengths differ")

    @property
    def values(self):
        return self.series.values

    def __len__(self):
        return len(self.series)


# ---------------------------------------------------------------- map registry

@dataclass(frozen=True)
class NARMap:
    """A registered auto-regressive map.

    ``fn(lags, exo, e)`` returns the next value; ``lags`` is
    ``(x_{t-1}, ..., x_{t-d})`` and ``exo`` is ``(xi_t, ..., xi_{t-d'})`` or
    None.
    """

    name: str
    fn: object
    description: str = ""
    additive: bool = True


MAPS = {}


def register_map(name, fn, description="", additive=True):
    """Add a map to the registry.

    With ``additive=True``, ``fn(lags, exo)`` is the deterministic part and
    the noise is added outside. Otherwise ``fn(lags, exo, e)`` receives the
    noise draw itself.
    """
    if additive:
        def full(lags, exo, e, _f=fn):
            return _f(lags, exo) + e
    else:
        full = fn
    MAPS[name] = NARMap(name, full, description, additive)
    return MAPS[name]


register_map("m1", lambda lags, exo: 0.5 * math.sin(lags[0]), "x_t = 0.5 sin(x_{t-1}) + e_t")
register_map("m2", lambda lags, exo, e: 0.5 * (lags[0] + e), "x_t = (x_{t-1} + e_t) / 2", additive=False)
register_map("zero", lambda lags, exo: 0.0, "x_t = e_t")
register_map("linear", lambda lags, exo: 0.9 * lags[0], "x_t = 0.9 x_{t-1} + e_t")
register_map("arx_sin", lambda lags, exo: 0.5 * math.sin(lags[0]) + 0.3 * float(np.sum(exo)),
             "x_t = 0.5 sin(x_{t-1}) + 0.3 sum(xi_t..xi_{t-d'}) + e_t")


def gen_nar(map_id, d, noise, n, x_init, seed=None, exo=None, exo_lags=0, burn_in=0, eps=None):
    """Iterate a registered map.

    Parameters
    ----------
    map_id : str
        Key into ``MAPS``.
    d : int
        Memory size.
    noise : NoiseSpec
    n : int
        Number of values returned.
    x_init : sequence of d floats
        ``(x_0, x_{-1}, ..., x_{1-d})``, most recent first.
    seed : int or Generator, optional
    exo : Series or array_like, optional
        Auxiliary series of length ``>= n + burn_in``; ``exo[t]`` pairs with
        output step ``t``. Entries before index 0 are taken as 0.
    exo_lags : int
        ``d'``; the map receives ``(xi_t, ..., xi_{t-d'})``.
    burn_in : int
        Leading steps generated and discarded.
    eps : array_like, optional
        Forced noise sequence of length ``n + burn_in``; overrides ``noise``.
    """
    if map_id not in MAPS:
        raise InvalidArgumentError(f"unknown map {map_id!r}; registered: {sorted(MAPS)}")
    if n < 1 or d < 1:
        raise InvalidArgumentError("n and d must be >= 1")
    total = n + burn_in
    x_init = np.atleast_1d(np.asarray(x_init, dtype=float))
    if x_init.size != d:
        raise InvalidArgumentError(f"x_init must hold d={d} values, got {x_init.size}")
    if eps is None:
        e = sample_noise(noise, total, seed)
    else:
        e = np.asarray(eps, dtype=float).reshape(-1)
        if e.size != total:
            raise InvalidArgumentError(f"forced noise must have length {total}, got {e.size}")
    if exo is not None:
        if isinstance(exo, (Series, GeneratedSeries)):
            exo = exo.values
        exo = np.asarray(exo, dtype=float).reshape(-1)
        if exo.size < total:
            raise InvalidArgumentError(f"exogenous series shorter than {total}")
        exo_pad = np.concatenate([np.zeros(exo_lags), exo])
    fn = MAPS[map_id].fn
    additive = MAPS[map_id].additive
    # hist holds x_{t-1}, ..., x_{t-d} with the newest first
    hist = list(x_init)
    x = np.empty(total)
    innov = np.empty(total)
    # divergence is reported below as a DataError, not as numpy warnings
    with np.errstate(over="ignore", invalid="ignore"):
        for t in range(total):
            lags = hist[:d]
            ex = None if exo is None else exo_pad[t:t + exo_lags + 1][::-1]
            xt = fn(lags, ex, e[t])
            x[t] = xt
            innov[t] = e[t] if additive else xt - fn(lags, ex, 0.0)
            hist.insert(0, xt)
            del hist[d:]
    if not np.all(np.isfinite(x)):
        raise DataError(f"map {map_id!r} produced non-finite values")
    meta = {"map": map_id, "d": d, "seed": None if isinstance(seed, np.random.Generator) else seed,
            "x_init": x_init.tolist(), "burn_in": burn_in}
    return GeneratedSeries(Series(x[burn_in:], f"synthetic({map_id})"),
                           e[burn_in:].copy(), innov[burn_in:], map_id, meta)


def gen_m1(n, noise, x0, seed=None, burn_in=0, eps=None):
    """``x_t = 0.5 sin(x_{t-1}) + e_t``."""
    return gen_nar("m1", 1, noise, n, [x0], seed, burn_in=burn_in, eps=eps)


def gen_m2(n, x0, seed=None, burn_in=0, eps=None, p=0.5):
    """``x_t = (x_{t-1} + e_t) / 2`` with ``e_t ~ Bernoulli(p)``."""
    if not 0 <= x0 <= 1:
        raise InvalidArgumentError(f"x0 must lie in [0, 1], got {x0}")
    return gen_nar("m2", 1, NoiseSpec.bernoulli(p), n, [x0], seed, burn_in=burn_in, eps=eps)


def embed(series, d=1):
    """Delay embedding into ``(x_{t-1}, ..., x_{t-d}) -> x_t`` pairs.

    Accepts a ``Series``, ``GeneratedSeries`` or plain array. For generated
    series the returned dataset carries the aligned innovations as ``noise``
    so ``denoised_targets`` is available.
    """
    innov = None
    if isinstance(series, GeneratedSeries):
        innov = series.innovation
        values = series.values
    elif isinstance(series, Series):
        values = series.values
    else:
        values = np.asarray(series, dtype=float).reshape(-1)
    d = int(d)
    if d < 1:
        raise InvalidArgumentError(f"memory size must be >= 1, got {d}")
    L = values.size
    if L < d + 1:
        raise InvalidArgumentError(f"series of length {L} too short for memory size {d}")
    X = np.column_stack([values[d - k:L - k] for k in range(1, d + 1)])
    y = values[d:]
    return EmbeddedDataset(X, y, None if innov is None else innov[d:])


def acf(series, max_lag):
    """Sample autocorrelation at lags ``0..max_lag`` (biased normalisation)."""
    x = series.values if isinstance(series, (Series, GeneratedSeries)) else np.asarray(series, dtype=float)
    max_lag = int(max_lag)
    if max_lag < 0 or x.size <= max_lag:
        raise InvalidArgumentError(f"need series length > max_lag, got {x.size} <= {max_lag}")
    c = x - x.mean()
    denom = float(c @ c)
    if denom == 0.0 or not np.isfinite(denom):
        raise DegenerateInputError("series has zero variance; ACF undefined")
    out = np.empty(max_lag + 1)
    out[0] = 1.0
    for k in range(1, max_lag + 1):
        out[k] = float(c[:-k] @ c[k:]) / denom
    return out


# ---------------------------------------------------------------- CSV I/O

def _g(v):
    return format(float(v), ".17g")


def write_series_csv(path, series):
    """``t,value`` (plus ``noise`` and, when it differs, ``innovation``)."""
    gen = series if isinstance(series, GeneratedSeries) else None
    values = series.values
    cols = ["t", "value"]
    if gen is not None:
        cols.append("noise")
        with_innov = not np.array_equal(gen.innovation, gen.noise)
        if with_innov:
            cols.append("innovation")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for t in range(values.size):
            row = [t, _g(values[t])]
            if gen is not None:
                row.append(_g(gen.noise[t]))
                if with_innov:
                    row.append(_g(gen.innovation[t]))
            w.writerow(row)


def read_series_csv(path):
    """Read a ``t,value[,noise[,innovation]]`` CSV.

    Returns a ``GeneratedSeries`` when a noise column is present, otherwise a
    ``Series``. Rows must be time-ordered.
    """
    values, noise, innov = [], [], []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise DataError(f"{path}: empty file")
        header = [h.strip() for h in header]
        if "value" not in header:
            raise DataError(f"{path}: line 1: header must contain 'value', got {header}")
        iv = header.index("value")
        inz = header.index("noise") if "noise" in header else None
        iin = header.index("innovation") if "innovation" in header else None
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            try:
                values.append(float(row[iv]))
                if inz is not None:
                    noise.append(float(row[inz]))
                if iin is not None:
                    innov.append(float(row[iin]))
            except (ValueError, IndexError) as exc:
                raise DataError(f"{path}: line {lineno}: cannot parse {row!r}") from exc
    if not values:
        raise DataError(f"{path}: no data rows")
    s = Series(values, f"file({path})")
    if inz is None:
        return s
    return GeneratedSeries(s, np.array(noise), np.array(innov) if innov else None, "file")


def write_dataset_csv(path, data):
    """Embedded dataset as ``x1,...,xd,y``."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"x{k + 1}" for k in range(data.d)] + ["y"])
        for x, y in zip(data.inputs, data.targets):
            w.writerow([_g(v) for v in x] + [_g(y)])


def read_dataset_csv(path):
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[-1].strip() != "y":
            raise DataError(f"{path}: line 1: expected header x1,...,xd,y")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                rows.append([float(c) for c in row])
            except ValueError as exc:
                raise DataError(f"{path}: line {lineno}: cannot parse {row!r}") from exc
            if len(rows[-1]) != len(header):
                raise DataError(f"{path}: line {lineno}: expected {len(header)} fields")
    if not rows:
        raise DataError(f"{path}: no data rows")
    arr = np.array(rows)
    return EmbeddedDataset(arr[:, :-1], arr[:, -1])
