"""Online quantile regression by stochastic subgradient descent.

Estimation engine (losses, subgradients, stepsize schedules, streaming
learners) plus a config-driven simulation harness that writes deterministic
CSV trajectories, run manifests, and figures.
"""

__version__ = "0.1.0"
