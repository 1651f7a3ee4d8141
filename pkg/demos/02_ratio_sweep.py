#!/usr/bin/env python3
"""RMSE against sub-sampling ratio, with lambda chosen by forward-chaining CV."""

from nystrom_ts import EvalProtocol, Mechanism, REFERENCE_GRIDS, ratio_sweep

grid = REFERENCE_GRIDS[("m1", "ratio", 2000)]
print("lambda grid:", grid[0], "...", grid[-1], f"({len(grid)} values)")

# refit="once" keeps this quick; the acceptance suite uses per-step refits
res = ratio_sweep(Mechanism.m1(), 2000, [0.001, 0.005, 0.01, 0.05, 0.1], grid, reps=3,
                  seed=1, n_test=50, protocol=EvalProtocol("once"), include_krr=True)

for a, mu, sd in zip(res.axis, res.rmse_mean, res.rmse_std):
    print(f"{str(a):>6}  {mu:.4f} +- {sd:.4f}")

# the curve flattens well before ratio 0.1; m = 2 is clearly worse
res.write_csv("ratio_sweep.csv")
