"""
Distributed initial states on the cycle.

Every family is described by its probability density ``|f(x)|**2`` in the
offset ``x`` from the centre vertex.  Amplitudes are the positive square
roots, renormalised over the n discrete vertices, so the continuous
normalisation constants only matter for the raw density values.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from cyclewalk.errors import InvalidInputError, NotLocalizedError
from cyclewalk.spectral import WalkState, probability_profile

FAMILIES = ("delta", "gaussian", "logistic", "gumbel", "lorentz", "uniform")

LOGISTIC_ALPHA = math.pi / (4.0 * math.sqrt(3.0))
GUMBEL_BETA = math.pi / math.sqrt(6.0)
LORENTZ_GAMMA = 6.0 * math.sqrt(2.0) / math.pi

# fraction of the mass that must sit on one half of the cycle before a
# profile can be unwrapped onto a line
LOCALIZATION_THRESHOLD = 0.99


def uniform_half_width(sigma0: float) -> int:
    """Integer half-width whose flat profile has variance closest to sigma0**2."""
    return int(round((-1.0 + math.sqrt(1.0 + 12.0 * sigma0 * sigma0)) / 2.0))


def density(family: str, x, sigma0: float, half_width: int | None = None) -> np.ndarray:
    """Continuous probability density of ``family`` at offsets ``x``."""
    x = np.asarray(x, dtype=float)
    s = float(sigma0)
    if family == "gaussian":
        return np.exp(-0.5 * (x / s) ** 2) / math.sqrt(2.0 * math.pi * s * s)
    if family == "logistic":
        return LOGISTIC_ALPHA / s / np.cosh(2.0 * LOGISTIC_ALPHA * x / s) ** 2
    if family == "gumbel":
        z = GUMBEL_BETA * x / s
        return GUMBEL_BETA / s * np.exp(-z - np.exp(-z))
    if family == "lorentz":
        return LORENTZ_GAMMA * s**5 / (x**6 + 8.0 * s**6)
    if family == "uniform":
        h = uniform_half_width(s) if half_width is None else int(half_width)
        return np.where(np.abs(x) <= h, 1.0 / (2 * h + 1), 0.0)
    if family == "delta":
        return np.where(x == 0, 1.0, 0.0)
    raise InvalidInputError(f"unknown distribution family {family!r}; expected one of {FAMILIES}")


def wrapped_offsets(n: int, center: int) -> np.ndarray:
    """Offset of every vertex from ``center``, folded into (-n/2, n/2]."""
    d = (np.arange(n) - center) % n
    d[d > n / 2] -= n
    return d


@dataclass(frozen=True)
class DistributionSpec:
    """Recipe for a distributed initial state.

    ``half_width`` only applies to the uniform family and overrides the
    width derived from ``sigma0``.
    """

    family: str
    sigma0: float = 1.0
    center: int = 0
    n: int = 200
    half_width: int | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise InvalidInputError(
                f"unknown distribution family {self.family!r}; expected one of {FAMILIES}"
            )
        if int(self.n) != self.n or self.n < 3:
            raise InvalidInputError(f"cycle needs an integer n >= 3, got {self.n!r}")
        if self.family != "delta":
            if self.half_width is not None and self.family == "uniform":
                if self.half_width < 0:
                    raise InvalidInputError("uniform half_width must be >= 0")
            elif not self.sigma0 > 0:
                raise InvalidInputError(f"sigma0 must be positive, got {self.sigma0!r}")

    @property
    def undersized(self) -> bool:
        """True when the cycle is shorter than ten standard deviations."""
        return self.family != "delta" and self.n < 10 * self.effective_sigma0

    @property
    def effective_sigma0(self) -> float:
        if self.family == "delta":
            return 0.0
        if self.family == "uniform" and self.half_width is not None:
            h = self.half_width
            return math.sqrt((h * h + h) / 3.0)
        return float(self.sigma0)

    def to_dict(self) -> dict:
        out = {"family": self.family, "sigma0": self.sigma0, "center": self.center, "n": self.n}
        if self.half_width is not None:
            out["half_width"] = self.half_width
        return out


def make_state(spec: DistributionSpec) -> WalkState:
    """Build the normalised real, non-negative state described by ``spec``."""
    n, center = int(spec.n), int(spec.center) % int(spec.n)
    meta = {"distribution": spec.to_dict(), "center": center}
    if spec.family == "delta":
        return WalkState(_delta(n, center), 0.0, meta)

    if spec.undersized:
        meta["undersized"] = True
        warnings.warn(
            f"n={n} is below 10*sigma0={10 * spec.effective_sigma0:g}; "
            "tails wrap around the cycle",
            stacklevel=2,
        )
    d = wrapped_offsets(n, center)
    if spec.family == "gaussian":
        amps = np.exp(-((d / (2.0 * spec.sigma0)) ** 2))
    else:
        amps = np.sqrt(density(spec.family, d, spec.sigma0, spec.half_width))
    amps = amps / np.linalg.norm(amps)
    if spec.family == "uniform":
        meta["half_width"] = spec.half_width if spec.half_width is not None else uniform_half_width(spec.sigma0)
    if spec.family == "gumbel":
        meta["mean_offset"] = float(np.sum(amps**2 * d))
    return WalkState(amps.astype(complex), 0.0, meta)


def _delta(n: int, center: int) -> np.ndarray:
    amps = np.zeros(n, dtype=complex)
    amps[center] = 1.0
    return amps


class Moments(NamedTuple):
    mean: float
    std: float
    skewness: float
    kurtosis: float


def best_half_arc(p: np.ndarray) -> tuple[int, float]:
    """Start vertex and mass of the heaviest arc covering half the cycle."""
    n = p.size
    width = n // 2 + 1
    ext = np.concatenate([p, p[: width - 1]])
    csum = np.concatenate([[0.0], np.cumsum(ext)])
    mass = csum[width:width + n] - csum[:n]
    start = int(np.argmax(mass))
    return start, float(mass[start])


def unwrapped_offsets(p: np.ndarray) -> np.ndarray:
    """Vertex coordinates unrolled around the heaviest half-cycle arc.

    Raises :class:`NotLocalizedError` when that arc holds less than
    ``LOCALIZATION_THRESHOLD`` of the mass.
    """
    n = p.size
    start, mass = best_half_arc(p)
    if mass < LOCALIZATION_THRESHOLD:
        raise NotLocalizedError(
            f"only {mass:.4f} of the probability lies on a half-cycle; cannot unwrap"
        )
    mid = start + (n // 2) / 2.0
    d = np.arange(n) - mid
    return (d + n / 2.0) % n - n / 2.0 + mid


def profile_moments(state: WalkState) -> Moments:
    """Mean vertex, standard deviation, skewness and (Pearson) kurtosis.

    The mean is reported modulo n.  Skewness and kurtosis are NaN for a
    profile with zero spread.
    """
    p = probability_profile(state)
    p = p / p.sum()
    x = unwrapped_offsets(p)
    mean = float(np.sum(p * x))
    dx = x - mean
    var = float(np.sum(p * dx * dx))
    std = math.sqrt(max(var, 0.0))
    if std < 1e-12:
        skew = kurt = float("nan")
    else:
        skew = float(np.sum(p * dx**3)) / std**3
        kurt = float(np.sum(p * dx**4)) / var**2
    return Moments(mean % p.size, std, skew, kurt)
