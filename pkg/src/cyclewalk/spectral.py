"""
Exact CTQW propagation on the cycle graph C_n.

The adjacency matrix of C_n is circulant, so the discrete Fourier basis
diagonalises it.  With ``F[j, k] = omega**(j*k) / sqrt(n)`` and
``omega = exp(2*pi*i/n)`` the eigenvalues are ``2*gamma*cos(2*pi*j/n)`` and

    psi(t) = F^dagger diag(exp(-i*lambda*t)) F psi(0)

holds for every real ``t``.  There is no time stepping anywhere: a state at
``t = 1e6`` costs the same as one at ``t = 1``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from cyclewalk.errors import InvalidInputError

NORM_TOL = 1e-9


@dataclass(frozen=True)
class CycleSpec:
    """Size and hopping rate of a cycle graph."""

    n: int
    gamma: float = 1.0

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 3:
            raise InvalidInputError(f"cycle needs an integer n >= 3, got {self.n!r}")
        if not self.gamma > 0:
            raise InvalidInputError(f"hopping rate must be positive, got {self.gamma!r}")
        object.__setattr__(self, "n", int(self.n))

    def antipodal(self, a: int = 0) -> int:
        """Vertex farthest from ``a``; for odd n the lower of the two."""
        return (a + (self.n - self.n % 2) // 2) % self.n

    @cached_property
    def basis(self) -> "SpectralBasis":
        return SpectralBasis.for_cycle(self.n, self.gamma)

    @property
    def eigenvalues(self) -> np.ndarray:
        return self.basis.eigenvalues


@dataclass(frozen=True, eq=False)
class WalkState:
    """Normalised vertex amplitudes at a given time.

    Parameters
    ----------
    amplitudes : array_like of complex
        One entry per vertex, ``sum |amplitudes|**2 == 1``.
    time : float
        Elapsed time in units of ``1/gamma``.
    """

    amplitudes: np.ndarray
    time: float = 0.0
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex)
        if amps.ndim != 1 or amps.size == 0:
            raise InvalidInputError("amplitudes must be a non-empty 1-D vector")
        norm = float(np.vdot(amps, amps).real)
        if abs(norm - 1.0) > NORM_TOL:
            raise InvalidInputError(f"state is not normalised (norm**2 = {norm:.15g})")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)
        object.__setattr__(self, "time", float(self.time))

    @property
    def n(self) -> int:
        return self.amplitudes.size

    @classmethod
    def vertex(cls, n: int, a: int = 0) -> "WalkState":
        """One-vertex state ``|a>``."""
        amps = np.zeros(n, dtype=complex)
        amps[a % n] = 1.0
        return cls(amps)

    def norm(self) -> float:
        return float(np.sqrt(np.vdot(self.amplitudes, self.amplitudes).real))


@dataclass(frozen=True, eq=False)
class SpectralBasis:
    """Eigenvalues of the cycle adjacency plus the Fourier transform pair."""

    eigenvalues: np.ndarray

    @classmethod
    def for_cycle(cls, n: int, gamma: float = 1.0) -> "SpectralBasis":
        j = np.arange(n)
        lam = 2.0 * gamma * np.cos(2.0 * np.pi * j / n)
        lam.setflags(write=False)
        return cls(lam)

    @property
    def n(self) -> int:
        return self.eigenvalues.size

    def matrix(self) -> np.ndarray:
        """Dense Fourier matrix ``F[j, k] = omega**(j*k) / sqrt(n)``."""
        n = self.n
        jk = np.outer(np.arange(n), np.arange(n)) % n
        return np.exp(2j * np.pi * jk / n) / np.sqrt(n)

    def forward(self, x, method: str = "fft") -> np.ndarray:
        """Vertex amplitudes to Fourier coefficients, ``F @ x``."""
        x = np.asarray(x, dtype=complex)
        if method == "fft":
            # numpy's ifft carries the +i sign, matching F
            return np.fft.ifft(x, norm="ortho")
        if method == "direct":
            return self.matrix() @ x
        raise InvalidInputError(f"unknown transform method {method!r}")

    def inverse(self, y, method: str = "fft") -> np.ndarray:
        """Fourier coefficients back to vertex amplitudes, ``F^dagger @ y``."""
        y = np.asarray(y, dtype=complex)
        if method == "fft":
            return np.fft.fft(y, norm="ortho")
        if method == "direct":
            return self.matrix().conj().T @ y
        raise InvalidInputError(f"unknown transform method {method!r}")


def _check_dims(spec: CycleSpec, state: WalkState):
    if state.n != spec.n:
        raise InvalidInputError(f"state has {state.n} vertices but the cycle has {spec.n}")


def evolve_cycle(spec: CycleSpec, initial: WalkState, t: float, method: str = "fft") -> WalkState:
    """Apply ``exp(-i A t)`` to ``initial``.

    Negative ``t`` runs the walk backwards.  The returned state's ``time`` is
    ``initial.time + t``.
    """
    _check_dims(spec, initial)
    basis = spec.basis
    coeffs = basis.forward(initial.amplitudes, method)
    amps = basis.inverse(np.exp(-1j * basis.eigenvalues * t) * coeffs, method)
    return WalkState(amps, initial.time + t, dict(initial.meta))


def amplitude_at(state: WalkState, vertex: int) -> complex:
    """Return ``<vertex|psi>``."""
    if int(vertex) != vertex or not 0 <= vertex < state.n:
        raise InvalidInputError(f"vertex {vertex!r} outside 0..{state.n - 1}")
    return complex(state.amplitudes[int(vertex)])


def probability_profile(state: WalkState) -> np.ndarray:
    """Vertex occupation probabilities ``|psi_k|**2``."""
    amps = state.amplitudes
    return amps.real**2 + amps.imag**2


def fourier_weights(spec: CycleSpec, initial: WalkState) -> np.ndarray:
    """Spectral weights ``|<F_j|psi>|**2`` of a state; they sum to one."""
    _check_dims(spec, initial)
    c = spec.basis.forward(initial.amplitudes)
    return c.real**2 + c.imag**2


class SpectralOverlap:
    """Vectorised overlap ``<D_shift ref|psi(t)>`` as a function of time.

    With ``reference`` left as ``None`` the initial state itself is displaced.
    Either way the overlap is one spectral sum per time,
    ``sum_j conj(r_j) omega**(-j*shift) c_j exp(-i lambda_j t)``, so the
    coefficients are computed once and reused for every evaluation.
    Components whose combined magnitude is below 1e-16 are dropped.
    """

    def __init__(
        self,
        spec: CycleSpec,
        initial: WalkState,
        shift: int = 0,
        reference: WalkState | None = None,
        chunk: int = 1 << 22,
    ):
        _check_dims(spec, initial)
        if reference is not None:
            _check_dims(spec, reference)
        basis = spec.basis
        n = spec.n
        c = basis.forward(initial.amplitudes)
        cref = c if reference is None else basis.forward(reference.amplitudes)
        j = np.arange(n)
        # F D_s x has coefficients omega**(j*s) (F x)_j
        weights = np.conj(cref * np.exp(2j * np.pi * j * (int(shift) % n) / n)) * c
        keep = _significant(np.abs(weights))
        self.weights = weights[keep]
        self.eigenvalues = basis.eigenvalues[keep]
        self.chunk = chunk

    def __call__(self, times) -> np.ndarray:
        times = np.asarray(times, dtype=float)
        flat = np.atleast_1d(times).ravel()
        out = np.empty(flat.size, dtype=complex)
        step = max(1, self.chunk // max(1, self.eigenvalues.size))
        for lo in range(0, flat.size, step):
            ts = flat[lo:lo + step]
            out[lo:lo + step] = np.exp(-1j * np.outer(ts, self.eigenvalues)) @ self.weights
        return out.reshape(times.shape) if times.ndim else out[0]

    def fidelity(self, times) -> np.ndarray:
        ov = self(times)
        return np.clip(ov.real**2 + ov.imag**2, 0.0, 1.0)


def overlap_series(spec, initial, times, shift=0, reference=None) -> np.ndarray:
    """Overlaps ``<D_shift ref|psi(t)>`` sampled at ``times``."""
    return SpectralOverlap(spec, initial, shift, reference)(np.atleast_1d(times))


def fidelity_series(spec: CycleSpec, initial: WalkState, times, shift: int = 0) -> np.ndarray:
    """``|<D_shift psi0|psi(t)>|**2`` sampled at ``times``."""
    return SpectralOverlap(spec, initial, shift).fidelity(np.atleast_1d(times))


def spectral_bandwidth(spec: CycleSpec, initial: WalkState, rel: float = 1e-8) -> float:
    """Spread of eigenvalues carrying non-negligible weight.

    A fidelity trace of this state has no frequency above this value apart
    from ripples of relative size ``~rel``, which bounds the sampling step
    needed to resolve its local maxima.
    """
    w = fourier_weights(spec, initial)
    lam = spec.basis.eigenvalues[w >= rel * w.max()]
    return float(lam.max() - lam.min())


def _significant(mag: np.ndarray, budget: float = 1e-16) -> np.ndarray:
    order = np.argsort(mag)
    dropped = np.cumsum(mag[order]) <= budget
    keep = np.ones(mag.size, dtype=bool)
    keep[order[dropped]] = False
    return keep
