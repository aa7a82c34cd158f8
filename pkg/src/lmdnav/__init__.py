"""Grid-world goal navigation with diffusion-based label-map completion."""

__version__ = "0.1.0"
