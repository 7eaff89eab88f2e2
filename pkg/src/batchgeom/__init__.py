"""Parallel batch-processing geometry: convex hulls, smallest enclosing balls and batch-dynamic kd-trees."""

__version__ = "0.1.0"
