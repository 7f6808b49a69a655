"""Delay interferometers and the radix-2 cascade that sorts frequency states.

A single unequal-path interferometer delays one arm by an integer number of
time bins and recombines. A binary tree of them, with the layer-``j`` device
delayed by ``d / 2**j`` bins and fine phases chosen per branch, routes each
frequency state to the central output bin of exactly one leaf port. Port
phases follow the branch's resolved frequency residue: a layer-``j`` device
fed by the branch that pinned ``n mod 2**(j-1) = r`` carries phase
``pi * r / 2**(j-1)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.constants import c as _C

from .errors import CascadeBuildError, DomainError, UndefinedVisibilityError
from .states import DEFAULT_BIN_WIDTH_S, PhotonicState, make_frequency_state

_FSR_TOL = 1e-6
_VERIFY_TOL = 1e-10


@dataclass(frozen=True)
class InterferometerSpec:
    """One delay interferometer.

    ``split_fraction`` is the power fraction sent down the undelayed arm by
    the input splitter (0.5 is balanced); the recombining splitter is ideal.
    ``alpha`` is the transmission left after insertion loss.
    """

    delay_bins: int
    phase_rad: float
    nominal_path_m: float
    fsr_hz: float
    alpha: float = 1.0
    split_fraction: float = 0.5

    def __post_init__(self):
        if self.delay_bins < 1:
            raise DomainError(f"delay_bins must be >= 1, got {self.delay_bins}")
        if not 0.0 < self.alpha <= 1.0:
            raise DomainError(f"alpha must be in (0, 1], got {self.alpha}")
        if not 0.0 < self.split_fraction < 1.0:
            raise DomainError(
                f"split_fraction must be in (0, 1), got {self.split_fraction}"
            )
        if self.nominal_path_m <= 0 or self.fsr_hz <= 0:
            raise DomainError("nominal path and FSR must be positive")
        if abs(self.fsr_hz - _C / self.nominal_path_m) > _FSR_TOL * self.fsr_hz:
            raise DomainError(
                f"FSR {self.fsr_hz} inconsistent with path {self.nominal_path_m}"
            )

    @classmethod
    def from_bins(cls, delay_bins: int, bin_width_s: float = DEFAULT_BIN_WIDTH_S,
                  phase_rad: float = 0.0, alpha: float = 1.0,
                  split_fraction: float = 0.5) -> "InterferometerSpec":
        """Build a spec whose path equals ``delay_bins`` bins of flight."""
        if delay_bins < 1:
            raise DomainError(f"delay_bins must be >= 1, got {delay_bins}")
        path = _C * bin_width_s * delay_bins
        return cls(delay_bins, phase_rad, path, 1.0 / (bin_width_s * delay_bins),
                   alpha, split_fraction)


@dataclass(frozen=True, eq=False)
class CascadeSpec:
    """Binary tree of interferometers for one frame dimension.

    ``interferometers`` is in breadth-first order (node ``k`` feeds nodes
    ``2k+1`` on its sum port and ``2k+2`` on its difference port).
    ``port_map[p]`` gives the frequency index measured at tree-order leaf
    ``p``; the order is bit-reversed, as in a decimation butterfly network.
    """

    dimension: int
    bin_width_s: float
    interferometers: tuple
    port_map: tuple

    def __post_init__(self):
        d = self.dimension
        if len(self.interferometers) != d - 1:
            raise DomainError(f"expected {d - 1} interferometers, got "
                              f"{len(self.interferometers)}")
        if sorted(self.port_map) != list(range(d)):
            raise DomainError("port_map must be a permutation of 0..d-1")
        for k, spec in enumerate(self.interferometers):
            layer = (k + 1).bit_length()
            if spec.delay_bins != d >> layer:
                raise DomainError(
                    f"node {k} (layer {layer}) has delay {spec.delay_bins} bins, "
                    f"expected {d >> layer}"
                )

    @property
    def depth(self) -> int:
        return self.dimension.bit_length() - 1


@dataclass(frozen=True, eq=False)
class PortOutcome:
    """Detection probabilities per output port and output time bin.

    Row ``n`` of ``probabilities`` belongs to the port assigned to frequency
    index ``n``; columns are the 2d-1 output bins, with full interference of
    all input peaks happening only at ``central_bin`` (index d-1).
    """

    probabilities: np.ndarray
    central_bin: int
    bin_width_s: float

    def __post_init__(self):
        probs = np.array(self.probabilities, dtype=float)
        total = float(probs.sum())
        if total > 1.0 + 1e-9:
            raise DomainError(f"total outcome probability {total!r} exceeds unity")
        probs.setflags(write=False)
        object.__setattr__(self, "probabilities", probs)

    @property
    def n_ports(self) -> int:
        return self.probabilities.shape[0]

    def central_probabilities(self) -> np.ndarray:
        return self.probabilities[:, self.central_bin].copy()

    @property
    def total_probability(self) -> float:
        return float(self.probabilities.sum())


def _transfer(amps: np.ndarray, delay_bins: int, phase_rad: float,
              alpha: float, split_fraction: float):
    """Two-port transfer of one device on a raw amplitude vector."""
    n = amps.size
    out_len = n + delay_bins
    direct = np.zeros(out_len, dtype=np.complex128)
    delayed = np.zeros(out_len, dtype=np.complex128)
    direct[:n] = amps
    delayed[delay_bins:] = amps * np.exp(1j * phase_rad)
    w_direct = math.sqrt(split_fraction)
    w_delayed = math.sqrt(1.0 - split_fraction)
    scale = math.sqrt(alpha) / math.sqrt(2.0)
    plus = scale * (w_direct * direct + w_delayed * delayed)
    minus = scale * (w_delayed * direct - w_direct * delayed)
    return plus, minus


def apply_interferometer(state: PhotonicState, spec: InterferometerSpec):
    """Propagate a state through one device; returns (sum port, difference port).

    The delayed arm carries ``exp(i * phase)``; each output vector grows by
    ``delay_bins`` spread bins. With ``alpha = 1`` the two ports together
    conserve the input norm.
    """
    plus, minus = _transfer(state.amplitudes, spec.delay_bins, spec.phase_rad,
                            spec.alpha, spec.split_fraction)
    return (PhotonicState(state.dimension, state.bin_width_s, plus),
            PhotonicState(state.dimension, state.bin_width_s, minus))


def build_cascade(d: int, bin_width_s: float = DEFAULT_BIN_WIDTH_S,
                  alpha: float = 1.0, split_fraction: float = 0.5,
                  verify: bool = True) -> CascadeSpec:
    """Construct the depth-log2(d) receiver cascade for dimension ``d``.

    Phases are assigned from each branch's resolved residue and then, unless
    ``verify`` is disabled, cross-checked against the brute-force DFT: every
    pure frequency state must land on its own port's central bin. A mismatch
    raises ``CascadeBuildError`` rather than returning a silently wrong tree.
    """
    if not (d >= 2 and (d & (d - 1)) == 0):
        raise DomainError(f"dimension must be a power of two >= 2, got {d}")
    depth = d.bit_length() - 1
    specs = [None] * (d - 1)
    port_map = [0] * d
    # (node index, layer, resolved residue); children extend the residue by
    # one bit: sum port keeps r, difference port adds 2**(layer-1).
    stack = [(0, 1, 0)]
    while stack:
        k, layer, r = stack.pop()
        half = 1 << (layer - 1)
        specs[k] = InterferometerSpec.from_bins(
            d >> layer, bin_width_s, phase_rad=math.pi * r / half,
            alpha=alpha, split_fraction=split_fraction)
        if layer == depth:
            leaf = 2 * k + 1 - (d - 1)
            port_map[leaf] = r
            port_map[leaf + 1] = r + half
        else:
            stack.append((2 * k + 1, layer + 1, r))
            stack.append((2 * k + 2, layer + 1, r + half))
    cascade = CascadeSpec(d, bin_width_s, tuple(specs), tuple(port_map))
    if verify:
        _verify_against_oracle(cascade)
    return cascade


def _verify_against_oracle(cascade: CascadeSpec) -> None:
    """Check port routing on an ideal (lossless, balanced) twin geometry."""
    d = cascade.dimension
    ideal = CascadeSpec(
        d, cascade.bin_width_s,
        tuple(InterferometerSpec.from_bins(s.delay_bins, cascade.bin_width_s,
                                           phase_rad=s.phase_rad)
              for s in cascade.interferometers),
        cascade.port_map)
    for n in range(d):
        outcome = measure_cascade(
            make_frequency_state(d, n, cascade.bin_width_s), ideal)
        central = outcome.central_probabilities()
        if abs(central[n] - 1.0 / d) > _VERIFY_TOL:
            raise CascadeBuildError(
                f"port {n} central-bin probability {central[n]!r}, expected {1.0 / d}"
            )
        others = np.delete(central, n)
        if others.size and float(np.max(others)) > _VERIFY_TOL:
            raise CascadeBuildError(
                f"frequency state {n} leaks {float(np.max(others))!r} into other ports"
            )


def with_phase_offsets(cascade: CascadeSpec, offsets_rad) -> CascadeSpec:
    """Copy of a cascade with per-node phase errors added (breadth-first order).

    The perturbed tree is deliberately not re-verified; it models a detuned
    receiver.
    """
    offsets = list(offsets_rad)
    if len(offsets) != len(cascade.interferometers):
        raise DomainError(
            f"expected {len(cascade.interferometers)} offsets, got {len(offsets)}"
        )
    perturbed = tuple(
        InterferometerSpec(s.delay_bins, s.phase_rad + off, s.nominal_path_m,
                           s.fsr_hz, s.alpha, s.split_fraction)
        for s, off in zip(cascade.interferometers, offsets))
    return CascadeSpec(cascade.dimension, cascade.bin_width_s, perturbed,
                       cascade.port_map)


def measure_cascade(state: PhotonicState, cascade: CascadeSpec) -> PortOutcome:
    """Propagate a frame-confined state through the full tree.

    Each port's probability vector spans 2d-1 output bins. For a lossless
    balanced cascade the central-bin probability at port ``n`` equals
    |<f_n|state>|^2 / d.
    """
    d = cascade.dimension
    if state.dimension != d:
        raise DomainError(
            f"state dimension {state.dimension} != cascade dimension {d}")
    if not math.isclose(state.bin_width_s, cascade.bin_width_s,
                        rel_tol=1e-9, abs_tol=0.0):
        raise DomainError("state and cascade bin widths differ")
    if not state.is_confined():
        raise DomainError("state has amplitude outside the first d bins")

    amp_tree = [None] * (2 * d - 1)
    amp_tree[0] = state.amplitudes[:d]
    for k, spec in enumerate(cascade.interferometers):
        plus, minus = _transfer(amp_tree[k], spec.delay_bins, spec.phase_rad,
                                spec.alpha, spec.split_fraction)
        amp_tree[2 * k + 1] = plus
        amp_tree[2 * k + 2] = minus

    probs = np.zeros((d, 2 * d - 1))
    for leaf in range(d):
        freq = cascade.port_map[leaf]
        probs[freq] = np.abs(amp_tree[d - 1 + leaf]) ** 2
    return PortOutcome(probs, central_bin=d - 1, bin_width_s=cascade.bin_width_s)


def central_bin_visibility(outcome: PortOutcome, expected_port: int) -> float:
    """Fringe contrast of the central bin against all other ports.

    (P_bright - P_rest) / (P_bright + P_rest), where P_bright is the expected
    port's central-bin probability and P_rest sums the other ports' central
    bins. Ranges over [-1, 1].
    """
    if outcome.n_ports < 2:
        raise DomainError("visibility needs at least two ports")
    if not 0 <= expected_port < outcome.n_ports:
        raise DomainError(f"port index {expected_port} out of range")
    central = outcome.central_probabilities()
    p_plus = float(central[expected_port])
    p_minus = float(central.sum() - p_plus)
    if p_plus + p_minus == 0.0:
        raise UndefinedVisibilityError("no probability in any central bin")
    return (p_plus - p_minus) / (p_plus + p_minus)
