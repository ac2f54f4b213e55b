"""Resurgent multi-instanton expansions for one-dimensional quantum potentials.

The package computes, exactly where possible, the ingredients of energy
trans-series for potentials with degenerate minima (symmetric double well,
periodic cosine, asymmetric/tilted wells, Fokker--Planck form, radial quartic
oscillators): perturbative quantization functions B(E,g), instanton functions
A(E,g) from higher-order WKB contour integrals, multi-instanton coefficient
towers, and spectral determinants.  A numerics layer provides independent
high-precision eigenvalues, Bloch bands, and Borel--Pade summation so every
analytic claim can be cross-validated numerically.
"""

__version__ = "0.1.0"

from . import exactnum  # noqa: F401

__all__ = [
    "exactnum",
    "potentials",
    "perturbation",
    "wkb",
    "resurgent",
    "numerics",
    "cache",
    "cli",
]
