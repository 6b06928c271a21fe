"""Physics-informed PDE solvers, trained either by least squares or as a
two-player zero-sum game, plus the optimizer stack and conditioning analysis
that motivate the game formulation."""

__version__ = "0.1.0"
