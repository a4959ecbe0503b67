"""Complex and biHermitian structures on four-dimensional real Lie algebras."""

__version__ = "0.1.0"
