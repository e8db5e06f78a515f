"""How conservative is the certified success bound?

For a few sample sizes, compare the certified lower bound with the exact
Gaussian-copula success probability (quadrature) and a Monte-Carlo estimate of
the selection experiment itself.
"""
from seqtune import GaussianCopula, p_hat_success, p_success_gaussian_oracle, p_success_mc_oracle

alpha, rho = 0.07, 0.9
print(f"alpha = {alpha}, rho = {rho}")
print(f"{'n':>7} {'bound':>8} {'omega':>7} {'exact':>8} {'monte-carlo':>16}")
for n in (100, 500, 2658, 7500, 30_000):
    b = p_hat_success(n, alpha, rho)
    exact = p_success_gaussian_oracle(n, alpha, rho)
    est, se = p_success_mc_oracle(GaussianCopula(rho), n, 1, alpha, 200_000, seed=n)
    print(f"{n:7d} {b.p:8.4f} {b.omega:7.3f} {exact:8.4f} {est:9.4f} +- {se:.4f}")

# with too few samples no omega is admissible and nothing can be certified
print("n = 4:", p_hat_success(4, alpha, rho))
