"""Time-bin states and their conjugate frequency (DFT) states.

A frame holds ``d`` contiguous time bins of width tau. A photon prepared in
a single bin encodes log2(d) bits in the time basis; the conjugate basis is
the discrete Fourier transform of the bin states, with bin ``m`` of the
``n``-th frequency state carrying phase 2*pi*n*m/d. Dimensions are
restricted to powers of two, matching the radix-2 receiver cascade.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

DEFAULT_BIN_WIDTH_S = 400e-12

_NORM_TOL = 1e-9
_CONFINEMENT_TOL = 1e-12


def _is_power_of_two(n: int) -> bool:
    return n >= 2 and (n & (n - 1)) == 0


@dataclass(frozen=True, eq=False)
class PhotonicState:
    """Complex amplitude vector over the time bins of one frame.

    ``amplitudes[m]`` is the amplitude in bin ``m``; entries at index
    ``dimension`` and beyond are spread/guard bins populated by
    propagation. The squared norm is 1 for freshly prepared states and can
    only shrink under lossy elements.
    """

    dimension: int
    bin_width_s: float
    amplitudes: np.ndarray

    def __post_init__(self):
        if not _is_power_of_two(self.dimension):
            raise DomainError(
                f"dimension must be a power of two >= 2, got {self.dimension}"
            )
        if self.bin_width_s <= 0:
            raise DomainError("bin width must be positive")
        amps = np.array(self.amplitudes, dtype=np.complex128)
        if amps.ndim != 1 or amps.size < self.dimension:
            raise DomainError("amplitudes must be 1-d with length >= dimension")
        norm = float(np.sum(np.abs(amps) ** 2))
        if norm > 1.0 + _NORM_TOL:
            raise DomainError(f"state norm {norm!r} exceeds unity")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def norm(self) -> float:
        """Total occupation probability, sum of |amplitude|^2."""
        return float(np.sum(np.abs(self.amplitudes) ** 2))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def is_confined(self, tol: float = _CONFINEMENT_TOL) -> bool:
        """True if no amplitude lives outside the first ``dimension`` bins."""
        tail = self.amplitudes[self.dimension:]
        return tail.size == 0 or float(np.max(np.abs(tail))) <= tol


def make_time_state(d: int, n: int, bin_width_s: float = DEFAULT_BIN_WIDTH_S) -> PhotonicState:
    """Photon prepared in bin ``n`` of a ``d``-bin frame."""
    if not _is_power_of_two(d):
        raise DomainError(f"dimension must be a power of two >= 2, got {d}")
    if not 0 <= n < d:
        raise DomainError(f"bin index {n} out of range for d={d}")
    amps = np.zeros(d, dtype=np.complex128)
    amps[n] = 1.0
    return PhotonicState(d, bin_width_s, amps)


def make_frequency_state(d: int, n: int, bin_width_s: float = DEFAULT_BIN_WIDTH_S) -> PhotonicState:
    """Equal-weight superposition with bin ``m`` phased by 2*pi*n*m/d."""
    if not _is_power_of_two(d):
        raise DomainError(f"dimension must be a power of two >= 2, got {d}")
    if not 0 <= n < d:
        raise DomainError(f"frequency index {n} out of range for d={d}")
    m = np.arange(d)
    amps = np.exp(2j * np.pi * n * m / d) / math.sqrt(d)
    return PhotonicState(d, bin_width_s, amps)


def inner_product(a: PhotonicState, b: PhotonicState) -> complex:
    """<a|b>, conjugate-linear in the first argument."""
    if a.dimension != b.dimension:
        raise DomainError(
            f"dimension mismatch: {a.dimension} vs {b.dimension}"
        )
    if a.amplitudes.size != b.amplitudes.size:
        raise DomainError(
            f"amplitude length mismatch: {a.amplitudes.size} vs {b.amplitudes.size}"
        )
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def dft_oracle(state: PhotonicState) -> np.ndarray:
    """Frequency-basis coefficients of a frame-confined state, by brute force.

    Coefficient ``n`` is the overlap of the ``n``-th frequency state with
    ``state``, evaluated as an explicit double sum so the result is
    independent of the cascade propagation it is used to check. Parseval
    holds: sum |c_n|^2 equals the state norm.
    """
    d = state.dimension
    if not state.is_confined():
        raise DomainError("state has amplitude outside the first d bins")
    amps = state.amplitudes[:d]
    coeffs = np.empty(d, dtype=np.complex128)
    root = math.sqrt(d)
    for n in range(d):
        acc = 0j
        for m in range(d):
            acc += cmath.exp(-2j * math.pi * n * m / d) * complex(amps[m])
        coeffs[n] = acc / root
    return coeffs


def random_state(d: int, rng: np.random.Generator,
                 bin_width_s: float = DEFAULT_BIN_WIDTH_S) -> PhotonicState:
    """Haar-ish random unit state confined to the first ``d`` bins."""
    z = rng.normal(size=d) + 1j * rng.normal(size=d)
    z /= np.linalg.norm(z)
    return PhotonicState(d, bin_width_s, z)
