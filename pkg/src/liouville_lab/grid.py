"""Collocation-grid transforms between truncated coefficients and field values.

Grids are uniform on [0, 2pi)^d with per-axis size G chosen as a power of two
at least ``factor * (2N+1)``, which keeps every quadrature and spectral
convolution below alias-free for the polynomial degrees used (factor 2 for
quartic functionals, factor r for powers |u|^{2r}, 3N+1 for the quadratic
fluid term).
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .spectral import SpectralModel

__all__ = ["grid_size", "to_grid", "from_grid", "grid_integral", "lattice_frequencies"]


def grid_size(model: SpectralModel, factor: float) -> int:
    need = int(np.ceil(factor * (2 * model.cutoff + 1)))
    g = 1
    while g < need:
        g *= 2
    return g


@lru_cache(maxsize=None)
def _scatter_index(model: SpectralModel, G: int):
    k = model.modes
    if model.dimension == 1:
        return (k[:, 0] % G,)
    return (k[:, 0] % G, k[:, 1] % G)


def to_grid(model: SpectralModel, coeffs: np.ndarray, G: int) -> np.ndarray:
    """Values of u(x) = (2pi)^{-d/2} sum_k u_k e^{ikx} on the G-per-axis grid."""
    coeffs = np.asarray(coeffs, dtype=np.complex128)
    batch = coeffs.shape[:-1]
    d = model.dimension
    idx = _scatter_index(model, G)
    spec = np.zeros(batch + (G,) * d, dtype=np.complex128)
    if d == 1:
        spec[..., idx[0]] = coeffs
        out = np.fft.ifft(spec, axis=-1)
    else:
        spec[..., idx[0], idx[1]] = coeffs
        out = np.fft.ifft2(spec, axes=(-2, -1))
    return out * (G**d / (2 * np.pi) ** (d / 2))


def from_grid(model: SpectralModel, values: np.ndarray, G: int) -> np.ndarray:
    """Coefficients of the retained modes (Galerkin projection of grid data)."""
    d = model.dimension
    idx = _scatter_index(model, G)
    if d == 1:
        spec = np.fft.fft(values, axis=-1)
        out = spec[..., idx[0]]
    else:
        spec = np.fft.fft2(values, axes=(-2, -1))
        out = spec[..., idx[0], idx[1]]
    return out * ((2 * np.pi) ** (d / 2) / G**d)


def grid_integral(values: np.ndarray, G: int, d: int) -> np.ndarray:
    """int over T^d by the trapezoid/rectangle rule (exact for band-limited data)."""
    axes = tuple(range(-d, 0))
    return values.sum(axis=axes) * (2 * np.pi / G) ** d


def lattice_frequencies(G: int, d: int):
    """Integer frequencies of the FFT lattice, shaped for broadcasting."""
    f = np.fft.fftfreq(G, d=1.0 / G).astype(np.int64)
    if d == 1:
        return (f,)
    return np.meshgrid(f, f, indexing="ij")
