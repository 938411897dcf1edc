"""Push-forward distributional actor-critic with an MMD exploration encourager."""

__version__ = "0.1.0"
