"""harmlab: an exact-arithmetic laboratory for harmonic functions, locally
specifiable linear maps and random walks on weighted graphs and groups."""

__version__ = "0.1.0"

from . import construct, graphs, groups, laplace, lca, linalg, walks  # noqa: F401
