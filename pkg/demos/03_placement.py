#!/usr/bin/env python3
"""Where the m consecutive columns come from hardly matters."""

from nystrom_ts import EvalProtocol, Mechanism, placement_study
from nystrom_ts.experiments import relative_spread

res = placement_study(Mechanism.m1(), 5000, 50, gaps=(5, 20), lambdas=5e-4, reps=3, seed=2,
                      n_test=40, protocol=EvalProtocol("once"))
for label, mu in zip(res.axis, res.rmse_mean):
    print(f"{label:>8}  {mu:.4f}")
print(f"relative spread {relative_spread(res.rmse_mean):.1%}")
