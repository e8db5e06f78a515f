"""Run the sequential certification loop on a synthetic source.

Pairs (z, x) come from a Gaussian copula with correlation 0.9792, and 7 % of
the true performances fall below the threshold. The loop stops once the lower
confidence bound on the success probability reaches 0.975.
"""
from seqtune import EngineConfig, GaussianCopulaSource, run_tuning

src = GaussianCopulaSource(rho=0.9792, alpha0=0.07, seed=1)
cfg = EngineConfig(delta=0.025, beta1=0.0125, beta2=0.0125, j_star=src.j_star)
report, theta = run_tuning(src, cfg)

for step in report.trajectory[:: max(1, len(report.trajectory) // 8)]:
    print(f"n={step.n:5d}  alpha_hat={step.alpha_hat:.3f}  rho_hat={step.rho_hat:.3f}  "
          f"alpha_lcb={step.alpha_lcb:+.3f}  rho_lcb={step.rho_lcb:+.3f}  p={step.p:.3f}")
print("stopped:", report.summary())

# the chosen candidate meets the threshold on a fresh draw with probability >= 0.95
tests = [src.test(theta) <= src.j_star for _ in range(1000)]
print("fresh-draw success rate of the chosen candidate:", sum(tests) / len(tests))
