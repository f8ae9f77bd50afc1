"""Day-ahead capacitor switching dispatch for distribution feeders."""

__version__ = "0.1.0"
