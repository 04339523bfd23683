"""Gaussian ensembles, nonlinear energy functionals, and Gibbs reweighting.

Normalization: the reference Gaussian is the free-field measure whose real
covariance operator on H^{-s} is A^{-(s+1)}, i.e.

    E <u, xi>_{H^-s}^2 = <xi, A^{-(s+1)} xi>_{H^-s},
    E exp(i <u, xi>_{H^-s}) = exp(-1/2 <xi, A^{-(s+1)} xi>_{H^-s}),

which in coefficients means independent real and imaginary parts of variance
1/lam_k each (E|u_k|^2 = 2/lam_k, independent of s).  This is the unique
scaling for which exp(-h) d nu0 is preserved by the canonical flow of
1/2 <u,Au> + h, so the transport identities verified downstream hold exactly
at the truncated level.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np
from scipy.special import eval_genlaguerre, eval_laguerre

from . import grid
from .spectral import Field, OperatorKind, SpectralModel, model_hash

__all__ = [
    "Ensemble",
    "Nonlinearity",
    "sample_gaussian",
    "mode_variance",
    "wick_variance",
    "energy",
    "gradient",
    "gibbs_reweight",
    "characteristic_functional",
    "gaussian_char_oracle",
    "pair_real",
]

NONLINEARITY_KINDS = ("none", "nls_power", "nls_wick", "hartree", "hartree_wick")


# -- ensembles ----------------------------------------------------------------


@dataclass
class Ensemble:
    """Weighted sample cloud standing in for a probability measure on H^{-s}."""

    model: SpectralModel
    coeffs: np.ndarray          # (count, M) complex
    weights: np.ndarray         # (count,) nonnegative
    seed: int = 0
    label: str = ""

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=np.complex128)
        self.weights = np.asarray(self.weights, dtype=np.float64)
        if self.coeffs.ndim != 2 or self.coeffs.shape[1] != self.model.size:
            raise ValueError(f"coeffs must be (count, {self.model.size})")
        if self.weights.shape != (self.coeffs.shape[0],):
            raise ValueError("one weight per sample required")
        if np.any(self.weights < 0) or not self.weights.sum() > 0:
            raise ValueError("weights must be nonnegative with positive total")

    @property
    def count(self) -> int:
        return self.coeffs.shape[0]

    @property
    def normalized_weights(self) -> np.ndarray:
        return self.weights / self.weights.sum()

    @property
    def ess(self) -> float:
        w = self.weights
        return float(w.sum() ** 2 / np.sum(w**2))

    def fields(self):
        return [Field(self.model, c) for c in self.coeffs]

    def mean(self, values: np.ndarray) -> float:
        """Weighted ensemble mean of per-sample scalars."""
        return float(np.sum(self.normalized_weights * values))

    def mean_and_se(self, values: np.ndarray) -> tuple[float, float]:
        w = self.normalized_weights
        m = float(np.sum(w * values))
        se = float(np.sqrt(np.sum((w * (values - m)) ** 2)))
        return m, se

    # persistence: manifest.json + samples.bin + weights.csv
    def save(self, directory) -> None:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        manifest = {
            "model": {
                "dimension": self.model.dimension,
                "cutoff": self.model.cutoff,
                "sobolev_s": self.model.sobolev_s,
                "operator_kind": self.model.operator_kind.value,
            },
            "model_hash": model_hash(self.model),
            "count": self.count,
            "seed": self.seed,
            "label": self.label,
        }
        (directory / "manifest.json").write_text(json.dumps(manifest, indent=2))
        flat = np.empty((self.count, 2 * self.model.size))
        flat[:, 0::2] = self.coeffs.real
        flat[:, 1::2] = self.coeffs.imag
        flat.tofile(directory / "samples.bin")
        with open(directory / "weights.csv", "w") as fh:
            for w in self.weights:
                fh.write(f"{w:.17g}\n")

    @classmethod
    def load(cls, directory) -> "Ensemble":
        directory = Path(directory)
        manifest = json.loads((directory / "manifest.json").read_text())
        m = manifest["model"]
        model = SpectralModel(
            m["dimension"], m["cutoff"], m["sobolev_s"], OperatorKind(m["operator_kind"])
        )
        if manifest["model_hash"] != model_hash(model):
            raise ValueError("manifest model hash mismatch")
        flat = np.fromfile(directory / "samples.bin").reshape(manifest["count"], -1)
        coeffs = flat[:, 0::2] + 1j * flat[:, 1::2]
        weights = np.loadtxt(directory / "weights.csv", ndmin=1)
        return cls(model, coeffs, weights, manifest["seed"], manifest["label"])


def mode_variance(model: SpectralModel) -> np.ndarray:
    """E|u_k|^2 = 2/lam_k per retained mode (real and imaginary parts 1/lam_k each)."""
    return 2.0 / model.eigenvalues


@lru_cache(maxsize=None)
def _conjugate_index(model: SpectralModel) -> np.ndarray:
    lookup = {tuple(k): i for i, k in enumerate(model.modes)}
    return np.array([lookup[tuple(-k)] for k in model.modes], dtype=np.int64)


def sample_gaussian(model: SpectralModel, count: int, seed: int, label: str = "nu0") -> Ensemble:
    """Draw the truncated free-field ensemble; counter-based RNG keyed by seed."""
    if count < 1:
        raise ValueError("count must be >= 1")
    rng = np.random.Generator(np.random.Philox(key=seed))
    parts = rng.standard_normal((count, 2, model.size))
    std = np.sqrt(1.0 / model.eigenvalues)
    z = std * (parts[:, 0] + 1j * parts[:, 1])
    if model.real_field:
        # conjugate-symmetrize so the field is real-valued; marginals unchanged
        z = (z + np.conj(z[:, _conjugate_index(model)])) / np.sqrt(2.0)
    return Ensemble(model, z, np.ones(count), seed=seed, label=label)


# -- nonlinear functionals ----------------------------------------------------


def _default_potential_hat(d: int):
    if d == 1:
        return lambda k2: np.exp(-k2)
    return lambda k2: 1.0 / np.sqrt(1.0 + k2)


def wick_variance(model: SpectralModel) -> float:
    """sigma_N^2 = E_{nu0} |u_N(x)|^2 = (2pi)^{-d} sum_k 2/lam_k (x-independent)."""
    if model.operator_kind is not OperatorKind.LAPLACIAN_PLUS_ONE:
        raise ValueError("Wick variance is defined for the laplacian_plus_one operator")
    return float(np.sum(mode_variance(model)) / (2 * np.pi) ** model.dimension)


class Nonlinearity:
    """A catalog energy functional bound to a model, with its analytic gradient.

    kinds: none | nls_power | nls_wick | hartree | hartree_wick.  Every
    gradient has the multiplier form grad h = c(x) u(x) with real c depending
    on |u|^2 only, which the split-step integrator exploits.
    """

    def __init__(self, model: SpectralModel, kind: str, r: int = 2,
                 potential_hat=None, decay_c: float = 1.0, decay_eps: float = 1.0):
        if kind not in NONLINEARITY_KINDS:
            raise ValueError(f"unknown nonlinearity kind {kind!r}")
        if kind.startswith("nls") and r < 1:
            raise ValueError("power nonlinearity needs r >= 1")
        self.model = model
        self.kind = kind
        self.r = int(r)
        factor = max(2, self.r) if kind.startswith("nls") else 2
        self.G = grid.grid_size(model, factor)
        self.sigma2 = wick_variance(model) if kind.endswith("wick") else 0.0
        self.vhat = None
        if kind.startswith("hartree"):
            # the symbol is a function of |k|^2, so V_hat is even by construction
            fn = potential_hat or _default_potential_hat(model.dimension)
            freqs = grid.lattice_frequencies(self.G, model.dimension)
            k2 = sum(np.asarray(f, dtype=np.float64) ** 2 for f in freqs)
            vhat = np.asarray(fn(k2), dtype=np.float64)
            if np.any(vhat < 0):
                raise ValueError("potential_hat must be nonnegative")
            if kind == "hartree_wick" and model.dimension == 2:
                bound = decay_c / np.sqrt(1.0 + k2) ** decay_eps
                if np.any(vhat > bound + 1e-12):
                    raise ValueError(
                        f"hartree_wick in d=2 requires V_hat(k) <= {decay_c}*<k>^-{decay_eps}"
                    )
            self.vhat = vhat

    def _check(self, coeffs: np.ndarray) -> np.ndarray:
        coeffs = np.asarray(coeffs, dtype=np.complex128)
        if coeffs.shape[-1] != self.model.size:
            raise ValueError("field does not match the nonlinearity's model")
        return coeffs

    def _convolve(self, density: np.ndarray) -> np.ndarray:
        """(V * density) on the grid via the lattice symbol."""
        if self.model.dimension == 1:
            return np.fft.ifft(self.vhat * np.fft.fft(density, axis=-1), axis=-1).real
        return np.fft.ifft2(self.vhat * np.fft.fft2(density, axes=(-2, -1)), axes=(-2, -1)).real

    def multiplier(self, fvals: np.ndarray) -> np.ndarray:
        """Real field c(x) with grad h = c(x) u(x); zero for kind 'none'."""
        if self.kind == "none":
            return np.zeros_like(fvals, dtype=np.float64)
        rho = np.abs(fvals) ** 2
        if self.kind == "nls_power":
            return rho ** (self.r - 1)
        if self.kind == "nls_wick":
            coef = (-1.0) ** (self.r - 1) * math.factorial(self.r - 1) * self.sigma2 ** (self.r - 1)
            return coef * eval_genlaguerre(self.r - 1, 1, rho / self.sigma2)
        if self.kind == "hartree":
            return self._convolve(rho)
        return self._convolve(rho - self.sigma2)

    def energy(self, coeffs: np.ndarray) -> np.ndarray:
        coeffs = self._check(coeffs)
        d = self.model.dimension
        if self.kind == "none":
            return np.zeros(coeffs.shape[:-1])
        f = grid.to_grid(self.model, coeffs, self.G)
        rho = np.abs(f) ** 2
        if self.kind == "nls_power":
            dens = rho**self.r / (2 * self.r)
        elif self.kind == "nls_wick":
            coef = (-1.0) ** self.r * math.factorial(self.r) * self.sigma2**self.r
            dens = coef * eval_laguerre(self.r, rho / self.sigma2) / (2 * self.r)
        elif self.kind == "hartree":
            dens = 0.25 * rho * self._convolve(rho)
        else:
            wick = rho - self.sigma2
            dens = 0.25 * wick * self._convolve(wick)
        return grid.grid_integral(dens, self.G, d)

    def gradient(self, coeffs: np.ndarray) -> np.ndarray:
        """Gradient for the real pairing Re<.,.>_{L^2}, Galerkin-projected."""
        coeffs = self._check(coeffs)
        if self.kind == "none":
            return np.zeros_like(coeffs)
        f = grid.to_grid(self.model, coeffs, self.G)
        return grid.from_grid(self.model, self.multiplier(f) * f, self.G)


def energy(nl: Nonlinearity, u) -> float | np.ndarray:
    c = u.coeffs if isinstance(u, Field) else u
    out = nl.energy(np.asarray(c))
    return float(out) if np.ndim(out) == 0 else out


def gradient(nl: Nonlinearity, u):
    if isinstance(u, Field):
        return Field(u.model, nl.gradient(u.coeffs))
    return nl.gradient(np.asarray(u))


# -- Gibbs reweighting ---------------------------------------------------------


def gibbs_reweight(ens: Ensemble, nl: Nonlinearity | None) -> tuple[Ensemble, dict]:
    """Importance-reweight a nu0 ensemble by exp(-h); self-normalized.

    Diagnostics carry the ESS and an empirical L^2 stability check: the
    half-ensemble means of exp(-2h) are compared (their relative difference is
    what certifies exp(-h) in L^2(nu0) at desk scale).
    """
    if not np.allclose(ens.weights, ens.weights[0]):
        raise ValueError("gibbs_reweight expects an unweighted ensemble")
    n = ens.count
    if nl is None or nl.kind == "none":
        diag = {"ess": float(n), "ess_fraction": 1.0, "l2_half_rel_diff": 0.0,
                "reliable": True, "log_weight_shift": 0.0}
        out = Ensemble(ens.model, ens.coeffs, np.ones(n), ens.seed, label=ens.label + ":gibbs-none")
        return out, diag
    h = nl.energy(ens.coeffs)
    if not np.all(np.isfinite(h)):
        raise ValueError("nonlinear energy produced non-finite values")
    shift = float(np.min(h))             # weights self-normalize; shift keeps them in (0, 1]
    w = np.exp(-(h - shift))
    ess = float(w.sum() ** 2 / np.sum(w**2))

    def _log_mean_exp(v):
        m = np.max(v)
        return m + np.log(np.mean(np.exp(v - m)))

    half = n // 2
    l1 = _log_mean_exp(-2.0 * (h[:half] - shift))
    l2 = _log_mean_exp(-2.0 * (h[half:] - shift))
    rel = float(abs(np.expm1(min(abs(l1 - l2), 700.0))))
    diag = {
        "ess": ess,
        "ess_fraction": ess / n,
        "l2_half_rel_diff": rel,
        "reliable": bool(ess >= 0.01 * n),
        "log_weight_shift": shift,
    }
    out = Ensemble(ens.model, ens.coeffs, w, ens.seed, label=ens.label + f":gibbs-{nl.kind}")
    return out, diag


# -- characteristic functionals -------------------------------------------------


def pair_real(model: SpectralModel, coeffs: np.ndarray, xi: np.ndarray) -> np.ndarray:
    """<u, xi>_{H^-s_R} = Re sum_k lam_k^{-s} u_k conj(xi_k)."""
    lam_s = model.eigenvalues ** (-model.sobolev_s)
    return np.real(coeffs * np.conj(xi) * lam_s).sum(axis=-1)


def characteristic_functional(ens: Ensemble, xi) -> tuple[complex, float]:
    """Weighted empirical mean of exp(i <u,xi>_{H^-s_R}) with its standard error."""
    xi_c = xi.coeffs if isinstance(xi, Field) else np.asarray(xi, dtype=np.complex128)
    phase = np.exp(1j * pair_real(ens.model, ens.coeffs, xi_c))
    total = ens.weights.sum()
    mean = complex(np.sum(ens.weights * phase) / total)
    w = ens.weights / total
    se2 = np.sum((w * (phase.real - mean.real)) ** 2) + np.sum((w * (phase.imag - mean.imag)) ** 2)
    return mean, float(np.sqrt(se2))


def gaussian_char_oracle(model: SpectralModel, xi) -> float:
    """Closed-form E exp(i<u,xi>) for the sampler's Gaussian law.

    Complex-coefficient models: exp(-1/2 sum lam^{-(2s+1)} |xi_k|^2), i.e.
    exp(-1/2 <xi, A^{-(s+1)} xi>_{H^-s}).  Real-field (mean-zero) models pair
    the +-k coefficients, so the variance involves |conj(xi_k) + xi_{-k}|^2.
    """
    xi_c = xi.coeffs if isinstance(xi, Field) else np.asarray(xi, dtype=np.complex128)
    lam_pow = model.eigenvalues ** (-2.0 * model.sobolev_s - 1.0)
    if model.real_field:
        amp = np.conj(xi_c) + xi_c[_conjugate_index(model)]
        var = 0.5 * np.sum(lam_pow * np.abs(amp) ** 2)
    else:
        var = np.sum(lam_pow * np.abs(xi_c) ** 2)
    return float(np.exp(-0.5 * var))
