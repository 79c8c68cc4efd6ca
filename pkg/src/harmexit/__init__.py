"""Exit-time eigenfunctions on geodesic balls of rank-one harmonic spaces."""

__version__ = "0.1.0"
