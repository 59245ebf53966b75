"""torusobs: random checkerboards and geodesic occupation times on the d-torus."""

from . import classes, ell, errors, experiments, geodesic, grid, largedev, rng

__all__ = ["classes", "ell", "errors", "experiments", "geodesic", "grid", "largedev", "rng"]
__version__ = "0.1.0"
