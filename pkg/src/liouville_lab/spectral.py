"""Truncated spectral phase space on the torus.

A model fixes the Fourier mode set ``{k in Z^d : |k|_inf <= N}`` (optionally
without k=0), the operator eigenvalues ``lam_k``, and a Sobolev exponent s.
Fields are complex coefficient vectors in the orthonormal basis
``phi_k(x) = (2pi)^{-d/2} exp(i k.x)`` of L^2(T^d).

The dual pair used for weak-* quantities and cylindrical test functions is
``e_k = lam_k^{-s/2} phi_k`` (unit vectors of H^s) and
``e*_k = lam_k^{s/2} phi_k``, so that ``<e*_j, e_k> = delta_jk``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

__all__ = [
    "OperatorKind",
    "SpectralModel",
    "Field",
    "build_model",
    "sobolev_norm",
    "weak_star_norm",
    "apply_semigroup",
    "project",
    "path_distance",
    "model_hash",
    "field_to_record",
    "field_from_record",
]


class OperatorKind(str, Enum):
    LAPLACIAN_PLUS_ONE = "laplacian_plus_one"
    LAPLACIAN_MEAN_ZERO = "laplacian_mean_zero"


def _mode_lattice(d: int, N: int, drop_zero: bool) -> np.ndarray:
    """Modes sorted by (|k|^2, lexicographic k); deterministic enumeration."""
    rng = range(-N, N + 1)
    if d == 1:
        ks = [(k,) for k in rng]
    else:
        ks = [(k1, k2) for k1 in rng for k2 in rng]
    if drop_zero:
        ks = [k for k in ks if any(k)]
    ks.sort(key=lambda k: (sum(c * c for c in k), k))
    return np.array(ks, dtype=np.int64)


@dataclass(frozen=True)
class SpectralModel:
    dimension: int
    cutoff: int
    sobolev_s: float
    operator_kind: OperatorKind
    modes: np.ndarray = field(init=False, repr=False, compare=False)
    eigenvalues: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.dimension not in (1, 2):
            raise ValueError(f"dimension must be 1 or 2, got {self.dimension}")
        if self.cutoff < 1:
            raise ValueError(f"cutoff must be >= 1, got {self.cutoff}")
        if self.sobolev_s < 0:
            raise ValueError(f"sobolev_s must be >= 0, got {self.sobolev_s}")
        kind = OperatorKind(self.operator_kind)
        object.__setattr__(self, "operator_kind", kind)
        if kind is OperatorKind.LAPLACIAN_PLUS_ONE and self.sobolev_s <= self.dimension / 2 - 1:
            raise ValueError(
                "Gaussian measure undefined: need s > d/2 - 1 "
                f"(got s={self.sobolev_s}, d={self.dimension})"
            )
        drop_zero = kind is OperatorKind.LAPLACIAN_MEAN_ZERO
        modes = _mode_lattice(self.dimension, self.cutoff, drop_zero)
        k2 = (modes.astype(np.float64) ** 2).sum(axis=1)
        lam = k2 + 1.0 if kind is OperatorKind.LAPLACIAN_PLUS_ONE else k2
        object.__setattr__(self, "modes", modes)
        object.__setattr__(self, "eigenvalues", lam)
        self.modes.setflags(write=False)
        self.eigenvalues.setflags(write=False)

    @property
    def size(self) -> int:
        """Number of retained modes M."""
        return len(self.eigenvalues)

    @property
    def real_field(self) -> bool:
        """Mean-zero models carry real-valued fields (conjugate-symmetric coeffs)."""
        return self.operator_kind is OperatorKind.LAPLACIAN_MEAN_ZERO

    @property
    def weak_star_weights(self) -> np.ndarray:
        """2^{-j} for mode-order index j = 1..M."""
        return np.ldexp(1.0, -np.arange(1, self.size + 1))

    @property
    def dual_pair_scale(self) -> np.ndarray:
        """lam^{-s/2}: <u, e_k> = scale_k * u_k (complex pairing)."""
        return self.eigenvalues ** (-self.sobolev_s / 2)

    def mode_index(self, k) -> int:
        """0-based position of lattice mode k in the enumeration."""
        k = np.atleast_1d(np.asarray(k, dtype=np.int64))
        hit = np.nonzero((self.modes == k[None, :]).all(axis=1))[0]
        if len(hit) != 1:
            raise KeyError(f"mode {tuple(k)} not in truncation")
        return int(hit[0])


def build_model(d: int, N: int, s: float, kind: OperatorKind | str) -> SpectralModel:
    return SpectralModel(d, N, float(s), OperatorKind(kind))


@dataclass
class Field:
    model: SpectralModel
    coeffs: np.ndarray

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=np.complex128)
        if self.coeffs.shape != (self.model.size,):
            raise ValueError(
                f"expected {self.model.size} coefficients, got shape {self.coeffs.shape}"
            )

    @property
    def finite(self) -> bool:
        return bool(np.isfinite(self.coeffs.view(np.float64)).all())


def _coeffs_of(u) -> np.ndarray:
    return u.coeffs if isinstance(u, Field) else np.asarray(u, dtype=np.complex128)


def sobolev_norm(u, r: float, model: SpectralModel | None = None) -> float:
    """H^r norm (sum_k lam_k^r |u_k|^2)^{1/2}; r may be negative."""
    if isinstance(u, Field):
        model = u.model
    c = _coeffs_of(u)
    lam_r = model.eigenvalues**r if r != 0 else 1.0
    return float(np.sqrt(np.sum(lam_r * np.abs(c) ** 2, axis=-1)))


def weak_star_norm(u, model: SpectralModel | None = None) -> float:
    """sum_j 2^{-j} |<u, e_j>| over the mode enumeration."""
    if isinstance(u, Field):
        model = u.model
    c = _coeffs_of(u)
    return float(np.sum(model.weak_star_weights * model.dual_pair_scale * np.abs(c), axis=-1))


def semigroup_phases(model: SpectralModel, t: float, sign: int = +1) -> np.ndarray:
    return np.exp(1j * sign * t * model.eigenvalues)


def apply_semigroup(u: Field, t: float, sign: int = +1) -> Field:
    """Coefficient-wise e^{sign i t lam_k}; exact isometry in every H^r."""
    return Field(u.model, u.coeffs * semigroup_phases(u.model, t, sign))


def project(u: Field, n: int) -> Field:
    """Zero all coefficients with mode-order index > n (1-based n)."""
    if not 1 <= n <= u.model.size:
        raise ValueError(f"projection rank n={n} outside 1..{u.model.size}")
    c = u.coeffs.copy()
    c[n:] = 0.0
    return Field(u.model, c)


def path_distance(times, states_a, states_b, model: SpectralModel, metric: str = "strong_d0") -> float:
    """Compact-open path metric sum_m 2^{-m} q(sup_{[-m,m]} ||a-b||) with
    q(x)=x/(1+x); the sup runs over grid points, the m-sum stops at ceil(T_max)."""
    times = np.asarray(times, dtype=np.float64)
    a = np.asarray(states_a)
    b = np.asarray(states_b)
    if a.shape != b.shape or len(times) != a.shape[0]:
        raise ValueError("trajectories must share one time grid")
    if metric == "strong_d0":
        lam_r = model.eigenvalues ** (-model.sobolev_s)
        per_t = np.sqrt(np.sum(lam_r * np.abs(a - b) ** 2, axis=1))
    elif metric == "weak_d0star":
        w = model.weak_star_weights * model.dual_pair_scale
        per_t = np.sum(w * np.abs(a - b), axis=1)
    else:
        raise ValueError(f"unknown metric {metric!r}")
    t_max = float(np.max(np.abs(times)))
    total = 0.0
    for m in range(1, max(1, math.ceil(t_max)) + 1):
        in_window = np.abs(times) <= m
        sup = float(per_t[in_window].max()) if in_window.any() else 0.0
        total += 2.0**-m * sup / (1.0 + sup)
    return total


def basis_field(model: SpectralModel, j: int, dual: bool = True) -> Field:
    """e*_j (dual=True, lam^{s/2} phi_j) or e_j (lam^{-s/2} phi_j), 1-based j."""
    if not 1 <= j <= model.size:
        raise ValueError(f"basis index {j} outside 1..{model.size}")
    c = np.zeros(model.size, dtype=np.complex128)
    expo = model.sobolev_s / 2 if dual else -model.sobolev_s / 2
    c[j - 1] = model.eigenvalues[j - 1] ** expo
    return Field(model, c)


# -- serialization ------------------------------------------------------------

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3


def _fnv1a(data: bytes) -> int:
    h = _FNV_OFFSET
    for byte in data:
        h ^= byte
        h = (h * _FNV_PRIME) & 0xFFFFFFFFFFFFFFFF
    return h


def model_hash(model: SpectralModel) -> int:
    """64-bit FNV-1a of (d, N, s, kind)."""
    tag = f"{model.dimension}|{model.cutoff}|{model.sobolev_s!r}|{model.operator_kind.value}"
    return _fnv1a(tag.encode())


def field_to_record(u: Field) -> dict:
    interleaved = np.empty(2 * u.model.size)
    interleaved[0::2] = u.coeffs.real
    interleaved[1::2] = u.coeffs.imag
    return {"model_hash": model_hash(u.model), "coeffs": interleaved.tolist()}


def field_from_record(record: dict, model: SpectralModel) -> Field:
    if record["model_hash"] != model_hash(model):
        raise ValueError("field record does not match the given model")
    flat = np.asarray(record["coeffs"], dtype=np.float64)
    return Field(model, flat[0::2] + 1j * flat[1::2])


def field_to_json(u: Field) -> str:
    return json.dumps(field_to_record(u))


def field_from_json(text: str, model: SpectralModel) -> Field:
    return field_from_record(json.loads(text), model)
