"""Physics-informed neural networks for forward elasticity and inverse
boundary-load identification, with uncertainty-weighted multi-task training
and a transfer-learning workflow."""

__version__ = "0.1.0"
