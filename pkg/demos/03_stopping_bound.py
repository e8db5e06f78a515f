"""Compare the predicted stopping-time distribution with simulated runs,
and find the correlation needed to beat a scenario-approach sample count."""
import numpy as np

from seqtune import EngineConfig, GaussianCopulaSource, run_certification
from seqtune.stopping import (
    StoppingBoundQuery, bound_quantile_n, empirical_cdf, median_crossing_rho,
    scenario_sample_bound, stopping_bound_curve,
)

query = StoppingBoundQuery(2, alpha0=0.07, rho0=0.9792, delta=0.025, beta1=0.0125, beta2=0.0125)
taus = []
for seed in range(40):
    src = GaussianCopulaSource(0.9792, 0.07, seed=seed)
    cfg = EngineConfig(0.025, 0.0125, 0.0125, src.j_star)
    taus.append(run_certification(src, cfg, keep_trajectory=False).tau)

ns = [2000, 3000, 4000, 5000, 6000, 8000, 10_000]
for n, b, f in zip(ns, stopping_bound_curve(query, ns), empirical_cdf(taus, ns)):
    shown = f"{b.value:.3f}" if b.informative else "  n/a"
    print(f"n={n:6d}  bound={shown}  empirical={f:.3f}")
print("median stopping time: simulated", np.median(taus), "bound", bound_quantile_n(query))

count = scenario_sample_bound(0.0499, 0.0001, 192)
rho = median_crossing_rho(count, 0.07, 0.025, 0.0125, 0.0125)
print(f"scenario approach needs {count} samples; the median stopping time is below that "
      f"once rho >= {rho:.4f}")
