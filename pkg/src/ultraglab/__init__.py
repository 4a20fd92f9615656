"""Numerical toolkit for Gevrey-scale generalized functions: nets, scale fits,
mollifier embeddings and directional wave-front estimates."""

__version__ = "0.1.0"
