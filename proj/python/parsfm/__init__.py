"""Divide-and-conquer camera-pose reconstruction.

Partitions an image match graph into size-bounded overlapping clusters,
solves each cluster independently, and merges the local reconstructions
into one frame via RANSAC similarity estimation, an MSD-weighted minimum
spanning tree, and minimum-height-tree anchor selection.
"""

from parsfm._core import *  # noqa: F401,F403

__all__ = [name for name in dir() if not name.startswith("_")]
