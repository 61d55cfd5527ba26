"""Joint feature and structure denoising of graph signals with framelet-regularized ADMM."""

__version__ = "0.1.0"
