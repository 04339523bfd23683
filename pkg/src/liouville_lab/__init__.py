"""Monte Carlo laboratory for statistical transport identities of Gaussian
and Gibbs ensembles under truncated spectral flows."""

__version__ = "0.1.0"

from . import flows, grid, liouville, measures, projection, spectral  # noqa: F401
