"""
Exact Shapley values from the full coalition system
====================================================

Fit a linear model on correlated synthetic data and explain one point by
solving the weighted least-squares system over all 2**p coalitions.
"""
import numpy as np

from shapwor import exact_shapley, fit_linear, generate_synthetic, kernel_weight

# kernel weights are symmetric in the coalition size and largest at the edges
p = 5
print("kernel weights:", [round(kernel_weight(p, s), 4) for s in range(1, p)])

data = generate_synthetic(p, 2000, seed=0, rho=0.5)
x = data.X_explain[0]

# with the marginal contribution function the game is additive and the
# Shapley value is beta_j (x_j - mean_j)
marginal = fit_linear(data, kind="linear-marginal")
res = exact_shapley(marginal, x)
print("marginal phi:  ", np.round(res.phi, 4))
print("closed form:   ", np.round(marginal.beta * (x - marginal.feature_means), 4))

# regressing the model output on each feature subset gives a game that
# spreads credit between correlated features
regression = fit_linear(data, kind="linear-regression")
res = exact_shapley(regression, x)
print("regression phi:", np.round(res.phi, 4))
print("phi0 + sum(phi) =", round(res.total, 6), " prediction =", round(regression.predict(x), 6))
