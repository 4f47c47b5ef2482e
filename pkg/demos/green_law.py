"""How long does a walk in a random Dirichlet environment linger at its start?

On a graph whose weights are balanced everywhere except at the start vertex x0,
the expected number of visits G(x0, x0) has an exact law: it is 1/W with W a
Beta variable. This script samples environments, solves for G, and compares
empirical quantiles with the Beta prediction.
"""
import numpy as np

from rwde.builders import two_cycle_graph
from rwde.certify import certify_green_law
from rwde.estimators import inverse_beta_cdf

graph = two_cycle_graph(2, 1, 1)
report, params, g = certify_green_law(graph, "x0", 20_000, seed=1)
print(f"predicted law: 1/Beta({params.a:g}, {params.b:g})")
print(f"KS statistic {report.statistic:.4f}, p-value {report.p_value:.3f}")

print("\n  q    empirical   predicted cdf at empirical quantile")
for q in (0.1, 0.25, 0.5, 0.75, 0.9, 0.99):
    t = np.quantile(g, q)
    print(f"{q:5.2f}  {t:10.4f}   {float(inverse_beta_cdf(t, params.a, params.b)):.4f}")
