#!/usr/bin/env python3
"""Nystrom fit on an M1 series next to full kernel ridge regression."""

import time

import numpy as np

from nystrom_ts import KernelSpec, Mechanism, SubsampleSpec, fit_krr, fit_nystrom, resolve, rmse

# %% data: x_t = 0.5 sin(x_{t-1}) + e, e ~ U(-0.7, 0.7)
train, test = Mechanism.m1().split(2000, 500, seed=7)
kernel = KernelSpec("wendland")
lam = 1e-3
print("train", len(train), "test", len(test))

# %% full KRR solves an n x n system
t0 = time.perf_counter()
krr = fit_krr(train, kernel, lam)
t_krr = time.perf_counter() - t0

# %% Nystrom keeps m consecutive columns at a random start
for ratio in (0.005, 0.01, 0.05, 0.1):
    idx = resolve(SubsampleSpec("random", ratio=ratio), len(train), np.random.default_rng(1))
    t0 = time.perf_counter()
    nys = fit_nystrom(train, kernel, lam, idx)
    dt = time.perf_counter() - t0
    err = rmse(nys.predict(test.inputs), test.denoised_targets)
    print(f"m={nys.m:4d}  rmse vs f0 {err:.4f}  fit {dt * 1e3:6.1f} ms")

print(f"KRR    rmse vs f0 {rmse(krr.predict(test.inputs), test.denoised_targets):.4f}"
      f"  fit {t_krr * 1e3:6.1f} ms")

# %% with every column kept the two estimators coincide
full = fit_nystrom(train.head(300), kernel, lam, np.arange(300))
ref = fit_krr(train.head(300), kernel, lam)
print("max |nystrom(all) - krr| on test:",
      np.max(np.abs(full.predict(test.inputs) - ref.predict(test.inputs))))
