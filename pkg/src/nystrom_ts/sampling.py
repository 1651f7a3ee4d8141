"""Column sub-sampling for Nystrom regularization.

Every strategy returns a strictly increasing array of 0-based positions into
the training sequence:

* ``sequential`` -- ``start, start+1, ..., start+m-1``
* ``random`` -- sequential with ``start`` drawn uniformly from ``0..n-m``
  (one generator draw)
* ``first`` / ``middle`` / ``last`` -- sequential at ``0``,
  ``(n - m) // 2`` and ``n - m``
* ``strided`` -- ``start, start+(gap+1), start+2(gap+1), ...``; gap 0 is
  sequential
"""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError
from .seeding import make_rng

MODES = ("sequential", "random", "first", "middle", "last", "strided")


@dataclass(frozen=True)
class SubsampleSpec:
    """How many columns to keep and where to take them from.

    Exactly one of ``m`` and ``ratio`` is used; ``m`` wins when both are set.
    A ratio resolves to ``max(1, floor(ratio * n))``.
    """

    mode: str = "random"
    m: int = None
    ratio: float = None
    start: int = 0
    gap: int = 0
    seed: int = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise InvalidArgumentError(f"unknown sub-sampling mode {self.mode!r}; expected one of {MODES}")
        if self.m is None and self.ratio is None:
            raise InvalidArgumentError("sub-sample needs either m or ratio")
        if self.m is not None and int(self.m) < 1:
            raise InvalidArgumentError(f"m must be >= 1, got {self.m}")
        if self.m is None and not 0 < self.ratio <= 1:
            raise InvalidArgumentError(f"ratio must lie in (0, 1], got {self.ratio}")
        if self.gap < 0:
            raise InvalidArgumentError(f"gap must be >= 0, got {self.gap}")
        if self.start < 0:
            raise InvalidArgumentError(f"start must be >= 0, got {self.start}")

    @property
    def label(self):
        if self.mode == "strided":
            return f"Intv.{self.gap}"
        if self.mode in ("first", "middle", "last"):
            return self.mode.capitalize()
        return self.mode

    def size_for(self, n):
        if self.m is not None:
            return int(self.m)
        return max(1, int(np.floor(self.ratio * n)))

    def to_config(self):
        out = {"mode": self.mode}
        for key in ("m", "ratio", "start", "gap", "seed"):
            val = getattr(self, key)
            if val is not None:
                out[key] = val
        return out

    @classmethod
    def from_config(cls, cfg):
        if isinstance(cfg, SubsampleSpec):
            return cfg
        cfg = dict(cfg)
        return cls(
            mode=cfg.get("mode", "random"),
            m=None if cfg.get("m") is None else int(cfg["m"]),
            ratio=None if cfg.get("ratio") is None else float(cfg["ratio"]),
            start=int(cfg.get("start", 0)),
            gap=int(cfg.get("gap", 0)),
            seed=cfg.get("seed"),
        )


def resolve(spec, n, rng=None):
    """Resolve ``spec`` against a dataset of size ``n``.

    ``rng`` may be a Generator (advanced by exactly one draw for ``random``
    mode), an integer seed, or None, in which case ``spec.seed`` is used.
    """
    n = int(n)
    if n < 1:
        raise InvalidArgumentError(f"dataset size must be >= 1, got {n}")
    m = spec.size_for(n)
    if m > n:
        raise InvalidArgumentError(
            f"sub-sample size m={m} exceeds dataset size n={n}; maximal feasible m is {n}")
    mode = spec.mode
    step = 1
    if mode == "sequential":
        start = spec.start
    elif mode == "first":
        start = 0
    elif mode == "middle":
        start = (n - m) // 2
    elif mode == "last":
        start = n - m
    elif mode == "random":
        if rng is None:
            if spec.seed is None:
                raise InvalidArgumentError("random sub-sampling needs a generator or spec.seed")
            rng = spec.seed
        start = int(make_rng(rng).integers(0, n - m + 1))
    else:
        start = spec.start
        step = spec.gap + 1
    last = start + (m - 1) * step
    if last > n - 1:
        max_m = max(0, (n - 1 - start) // step + 1) if start <= n - 1 else 0
        raise InvalidArgumentError(
            f"{spec.label} sub-sample with start={start}, step={step}, m={m} overruns "
            f"n={n}; maximal feasible m is {max_m}")
    return np.arange(start, last + 1, step, dtype=np.int64)
