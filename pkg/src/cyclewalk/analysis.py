"""
Transfer probability, fidelity, transfer times and peak envelopes.

Fidelity is measured against the initial state displaced by ``shift``
vertices, ``|<Psi_0| D^dagger |Psi_t>|**2``.  The default shift moves the
initial state onto the antipodal vertex.

Maxima are located in two steps: a uniform coarse grid with a three-point
local-maximum test, then a parabola through the bracketing samples polished
with Brent's bounded search.  The coarse step is the smaller of
``tau_estimate / dt_divisor`` and a bandwidth limit derived from the
eigenvalues the state actually populates, so narrow peaks (small sigma0)
are never stepped over.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from cyclewalk.errors import InvalidInputError, NotLocalizedError, SearchHorizonError
from cyclewalk.spectral import (
    CycleSpec,
    SpectralOverlap,
    WalkState,
    evolve_cycle,
    probability_profile,
    spectral_bandwidth,
)
from cyclewalk.states import profile_moments

DT_DIVISOR = 200
# oversampling of the fidelity trace relative to its Nyquist step
BANDWIDTH_OVERSAMPLE = 4.0
DELTA_REL_HEIGHT = 1e-3
DISTRIBUTED_REL_HEIGHT = 0.8
# revival cluster span, as a fraction of the first qualifying peak time
DISTRIBUTED_CLUSTER = 0.05


# -- state helpers -----------------------------------------------------------

def state_center(state: WalkState) -> int:
    """Centre vertex of a state: recorded at construction, else the heaviest vertex."""
    if "center" in state.meta:
        return int(state.meta["center"]) % state.n
    return int(np.argmax(probability_profile(state)))


def is_one_vertex(state: WalkState) -> bool:
    return int(np.count_nonzero(np.abs(state.amplitudes) > 1e-15)) == 1


def antipodal_shift(spec: CycleSpec) -> int:
    return spec.antipodal(0)


# -- point evaluations ---------------------------------------------------------

def antipodal_probability(spec: CycleSpec, initial: WalkState, t):
    """``|<b|Psi_t>|**2`` with b the antipode of the initial centre.

    ``t`` may be a scalar or an array of times.
    """
    b = spec.antipodal(state_center(initial))
    ov = SpectralOverlap(spec, initial, 0, WalkState.vertex(spec.n, b))(t)
    return np.abs(ov) ** 2 if np.ndim(ov) else float(abs(ov) ** 2)


def fidelity(spec: CycleSpec, initial: WalkState, t, shift: int | None = None):
    """Fidelity of the walk against the initial state displaced by ``shift``.

    ``shift`` defaults to the antipodal offset.  ``t`` may be a scalar or an
    array.
    """
    if shift is None:
        shift = antipodal_shift(spec)
    val = SpectralOverlap(spec, initial, shift).fidelity(t)
    return val if np.ndim(val) else float(val)


@dataclass(frozen=True, eq=False)
class FidelityTrace:
    times: np.ndarray
    values: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if times.shape != values.shape or times.ndim != 1:
            raise InvalidInputError("times and values must be 1-D arrays of equal length")
        if times.size > 1 and np.any(np.diff(times) <= 0):
            raise InvalidInputError("times must be strictly increasing")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)


def fidelity_trace(spec: CycleSpec, initial: WalkState, times, shift: int | None = None) -> FidelityTrace:
    if shift is None:
        shift = antipodal_shift(spec)
    times = np.asarray(times, dtype=float)
    values = SpectralOverlap(spec, initial, shift).fidelity(times)
    meta = {
        "n": spec.n,
        "distribution": initial.meta.get("distribution"),
        "target": (state_center(initial) + shift) % spec.n,
    }
    return FidelityTrace(times, values, meta)


# -- peak machinery ------------------------------------------------------------

def local_maxima(values: np.ndarray) -> np.ndarray:
    """Indices ``i`` with ``v[i-1] < v[i] >= v[i+1]``."""
    v = np.asarray(values)
    if v.size < 3:
        return np.empty(0, dtype=int)
    mid = v[1:-1]
    return np.nonzero((mid > v[:-2]) & (mid >= v[2:]))[0] + 1


def parabolic_vertex(t0: float, t1: float, t2: float, y0: float, y1: float, y2: float) -> float:
    """Abscissa of the parabola through three points (equal spacing not required)."""
    d0, d2 = t0 - t1, t2 - t1
    num = d0 * d0 * (y1 - y2) - d2 * d2 * (y1 - y0)
    den = d0 * (y1 - y2) - d2 * (y1 - y0)
    if den == 0:
        return t1
    return t1 + 0.5 * num / den


def refine_peak(func, t_lo: float, t_mid: float, t_hi: float, rtol: float = 1e-8) -> tuple[float, float]:
    """Refine a bracketed maximum of a scalar function of time.

    Returns ``(t_peak, value)``.  The result never falls below the middle
    sample of the bracket.
    """
    y0, y1, y2 = (float(func(t)) for t in (t_lo, t_mid, t_hi))
    guess = min(max(parabolic_vertex(t_lo, t_mid, t_hi, y0, y1, y2), t_lo), t_hi)
    xatol = rtol * max(abs(t_mid), 1.0)
    res = minimize_scalar(
        lambda t: -float(func(t)), bounds=(t_lo, t_hi), method="bounded",
        options={"xatol": xatol},
    )
    best_t, best_y = t_mid, y1
    for t, y in ((guess, float(func(guess))), (float(res.x), -float(res.fun))):
        if y > best_y:
            best_t, best_y = t, y
    return best_t, best_y


def coarse_step(spec: CycleSpec, initial: WalkState, tau_estimate: float, dt_divisor: float = DT_DIVISOR) -> float:
    band = spectral_bandwidth(spec, initial)
    band_step = math.pi / (2.0 * band * BANDWIDTH_OVERSAMPLE) if band > 0 else math.inf
    return min(tau_estimate / dt_divisor, band_step)


class TransferTime(NamedTuple):
    tau: float
    value: float
    shift: int


def find_transfer_time(
    spec: CycleSpec,
    initial: WalkState,
    dt_divisor: float = DT_DIVISOR,
    rel_height: float | None = None,
    horizon: float | None = None,
    cluster: float | None = None,
) -> TransferTime:
    """Time of the first significant maximum of the antipodal fidelity.

    A local maximum qualifies when it reaches ``rel_height`` times the
    largest sampled value in the search bracket.  The highest maximum
    within ``cluster * t_first`` after the first qualifying one is returned.

    For one-vertex states the defaults (1e-3, no cluster) only reject
    round-off ripples ahead of the wave front, so the result is the literal
    first maximum.  For distributed states the defaults (0.8, 5%) skip the
    fractional revivals near tau/3 and tau/2 and pick the top of the main
    revival even when rough profiles (uniform) split it into sub-peaks.

    The bracket is ``(0, n]`` for one-vertex states and ``(0, 0.2 n**2]``
    otherwise, in units of ``1/gamma``.

    Raises
    ------
    SearchHorizonError
        If no qualifying maximum lies inside the bracket.
    """
    n, g = spec.n, spec.gamma
    one_vertex = is_one_vertex(initial)
    if rel_height is None:
        rel_height = DELTA_REL_HEIGHT if one_vertex else DISTRIBUTED_REL_HEIGHT
    if cluster is None:
        cluster = 0.0 if one_vertex else DISTRIBUTED_CLUSTER
    if one_vertex:
        tau_est, bracket = n / 4.0 / g, float(n) / g
    else:
        tau_est, bracket = 0.08 * n * n / g, 0.2 * n * n / g
    if horizon is not None:
        bracket = float(horizon)
    shift = antipodal_shift(spec)
    kernel = SpectralOverlap(spec, initial, shift)
    dt = coarse_step(spec, initial, tau_est, dt_divisor)
    times = np.arange(0.0, bracket + 0.5 * dt, dt)
    values = kernel.fidelity(times)
    peaks = local_maxima(values)
    if peaks.size:
        peaks = peaks[values[peaks] >= rel_height * values.max()]
    if not peaks.size:
        raise SearchHorizonError(f"no fidelity maximum within t <= {bracket:g} on C_{n}")
    first = times[peaks[0]]
    grouped = peaks[times[peaks] <= first * (1.0 + cluster)]
    i = int(grouped[np.argmax(values[grouped])])
    tau, val = refine_peak(kernel.fidelity, times[i - 1], times[i], times[i + 1])
    return TransferTime(tau, val, shift)


@dataclass(frozen=True)
class PeakRecord:
    """Highest refined fidelity maximum inside one search window."""

    index: int
    peak_time: float
    peak_value: float
    window: tuple[float, float]
    shift: int
    present: bool = True


def track_peaks(
    spec: CycleSpec,
    initial: WalkState,
    tau: float,
    max_multiple: int,
    dt_divisor: float = DT_DIVISOR,
    follow: bool = True,
) -> list[PeakRecord]:
    """Follow the fidelity maxima of revivals m = 2..max_multiple.

    Each window is one tau wide.  With ``follow`` (the default) window m is
    centred one tau after the peak found in window m-1, so the search keeps
    up with the slow drift of the true revival period over thousands of
    periods; otherwise windows sit at fixed multiples ``m * tau``.

    Even multiples compare against the initial state in place (shift 0), odd
    multiples against its antipodal image.  A window without any local
    maximum yields a record with ``present=False`` and NaN time and value.
    """
    if max_multiple < 2:
        raise InvalidInputError("max_multiple must be at least 2")
    if not tau > 0:
        raise InvalidInputError("tau must be positive")
    b = antipodal_shift(spec)
    kernels = {0: SpectralOverlap(spec, initial, 0), b: SpectralOverlap(spec, initial, b)}
    dt = coarse_step(spec, initial, tau, dt_divisor)
    offsets = np.arange(-0.5 * tau, 0.5 * tau + 0.5 * dt, dt)
    records = []
    previous = tau
    for m in range(2, int(max_multiple) + 1):
        shift = 0 if m % 2 == 0 else b
        kernel = kernels[shift]
        center = previous + tau if follow else m * tau
        lo, hi = center - 0.5 * tau, center + 0.5 * tau
        times = center + offsets
        values = kernel.fidelity(times)
        peaks = local_maxima(values)
        if not peaks.size:
            records.append(PeakRecord(m, math.nan, math.nan, (lo, hi), shift, False))
            previous = center
            continue
        i = int(peaks[np.argmax(values[peaks])])
        t_pk, v_pk = refine_peak(kernel.fidelity, times[i - 1], times[i], times[i + 1])
        records.append(PeakRecord(m, t_pk, v_pk, (lo, hi), shift))
        previous = t_pk
    return records


# -- fits ----------------------------------------------------------------------

@dataclass(frozen=True)
class PowerLawFit:
    """Least-squares fit of ``y = prefactor * n**(-exponent)`` in log-log space."""

    exponent: float
    prefactor: float
    r_squared: float
    n_range: tuple[float, float]
    parity: str
    count: int


def fit_power_law(points: Sequence[tuple[float, float]], parity: str = "all") -> PowerLawFit:
    if parity not in ("even", "odd", "all"):
        raise InvalidInputError(f"parity must be even, odd or all, got {parity!r}")
    pts = [(float(n), float(y)) for n, y in points]
    if parity != "all":
        want = 0 if parity == "even" else 1
        pts = [(n, y) for n, y in pts if int(round(n)) % 2 == want]
    if len(pts) < 5:
        raise InvalidInputError(f"need at least 5 points for a power-law fit, got {len(pts)}")
    arr = np.array(pts)
    if np.any(arr <= 0):
        raise InvalidInputError("power-law fit needs positive n and y")
    x, y = np.log(arr[:, 0]), np.log(arr[:, 1])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    return PowerLawFit(
        exponent=-float(slope),
        prefactor=float(np.exp(intercept)),
        r_squared=max(0.0, r2),
        n_range=(float(arr[:, 0].min()), float(arr[:, 0].max())),
        parity=parity,
        count=len(pts),
    )


def fit_quadratic_prefactor(points: Sequence[tuple[float, float]]) -> float:
    """Least-squares ``c`` in ``y = c * n**2``."""
    arr = np.asarray(points, dtype=float)
    n2 = arr[:, 0] ** 2
    return float(np.dot(n2, arr[:, 1]) / np.dot(n2, n2))


# -- spreading -----------------------------------------------------------------

def dispersion_growth(spec: CycleSpec, initial: WalkState, t_grid) -> list[tuple[float, float]]:
    """Unwrapped standard deviation of the walk at each requested time.

    Every time must satisfy ``sigma0 + 2*gamma*t < n/4`` so the packet has not
    wrapped around the cycle; the first that does not raises
    :class:`NotLocalizedError`.
    """
    sigma0 = profile_moments(initial).std
    limit = spec.n / 4.0
    out = []
    for t in np.asarray(t_grid, dtype=float):
        if sigma0 + 2.0 * spec.gamma * abs(t) >= limit:
            raise NotLocalizedError(
                f"t={t:g} is past the pre-wrap window (sigma0 + 2 t must stay below n/4 = {limit:g})"
            )
        state = evolve_cycle(spec, initial, float(t))
        out.append((float(t), profile_moments(state).std))
    return out


def spreading_rate(samples: Sequence[tuple[float, float]], tail: float = 1.0) -> float:
    """Slope of a straight-line fit of sigma(t) over the last ``tail`` fraction."""
    arr = np.asarray(samples, dtype=float)
    k = max(2, int(math.ceil(tail * len(arr))))
    arr = arr[-k:]
    return float(np.polyfit(arr[:, 0], arr[:, 1], 1)[0])


# -- half period ----------------------------------------------------------------

def half_period_profile_check(spec: CycleSpec, initial: WalkState, tau: float) -> float:
    """L1 distance between the profile at tau/2 and the balanced two-packet mixture.

    The mixture is the average of the initial profile and its antipodal
    image.  Only wide packets (sigma0 >= 5, n >= 20 sigma0) are accepted.
    """
    dist = initial.meta.get("distribution") or {}
    sigma0 = dist.get("sigma0") if dist.get("family") not in (None, "delta") else None
    if sigma0 is None:
        sigma0 = profile_moments(initial).std
    if sigma0 < 5 or spec.n < 20 * sigma0:
        raise InvalidInputError(
            f"half-period check needs sigma0 >= 5 and n >= 20*sigma0 (sigma0={sigma0:g}, n={spec.n})"
        )
    p0 = probability_profile(initial)
    mixture = 0.5 * (p0 + np.roll(p0, antipodal_shift(spec)))
    p_half = probability_profile(evolve_cycle(spec, initial, 0.5 * tau))
    return float(np.abs(p_half - mixture).sum())
