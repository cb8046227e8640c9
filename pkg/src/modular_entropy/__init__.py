"""Entropy of vectors relative to standard subspaces.

Finite-dimensional standard subspaces (:mod:`.subspace`, built on the
real-linear operator layer in :mod:`.reallin`), free Klein-Gordon waves on a
periodic grid (:mod:`.kleingordon`), coherent states in a truncated Fock
space (:mod:`.fock`) and a scenario runner (:mod:`.cli`).
"""

__version__ = "0.1.0"
