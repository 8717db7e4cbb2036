"""Boundary masses, Lelong-type invariants and residual-mass bounds of
circle-invariant plurisubharmonic functions, computed through the Hopf
fibration."""

__version__ = "0.1.0"
