"""Random choice solver for 1-D hyperbolic balance laws with
space-time dependent flux, plus interaction-functional diagnostics."""

__version__ = "0.1.0"
