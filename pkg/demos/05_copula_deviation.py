"""What happens when the dependence is not Gaussian.

A Frank copula has a non-degenerate lower-tail conditional distribution, so
its success probability levels off below one while the associated Gaussian
copula's keeps rising. The gap is bounded by the deviation nu.
"""
from seqtune import FrankCopula, estimate_nu, p_success_gaussian_oracle, p_success_mc_oracle

alpha = 0.07
for lam in (2.0, 5.0, 10.0):
    model = FrankCopula(lam)
    rho = model.associated_rho
    nu = estimate_nu(model)
    print(f"lambda={lam:4.1f}  kendall={model.kendall:.3f}  associated rho={rho:.3f}  nu~{nu:.3f}")
    for n in (100, 1000, 10_000):
        gauss = p_success_gaussian_oracle(n, alpha, rho)
        frank, se = p_success_mc_oracle(model, n, 1, alpha, 200_000, seed=n)
        print(f"   n={n:6d}  gaussian={gauss:.3f}  frank={frank:.3f}  gap={gauss - frank:+.3f}")
