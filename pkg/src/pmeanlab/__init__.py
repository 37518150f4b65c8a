"""Variational p-means, their small-radius asymptotics and a p-harmonious grid solver."""

__version__ = "0.1.0"
