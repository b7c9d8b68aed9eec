"""aonlab: numerical laboratory for the all-or-nothing transition in the Gaussian additive model."""

__version__ = "1.0.0"
