"""Legitimate readout, enrollment masking and attack-trace collection."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from cntpuf import seeding
from cntpuf.crossbar import Crossbar, SchemeKind, evaluate_scheme, make_bias_scheme
from cntpuf.device_model import ClassMix, ConfigError


@dataclass(frozen=True)
class BiasParams:
    v_drive: float = 0.5
    v_gate_on: float = 2.0

    def __post_init__(self):
        if not (math.isfinite(self.v_drive) and math.isfinite(self.v_gate_on)):
            raise ConfigError("bias voltages must be finite")
        if self.v_drive == 0:
            raise ConfigError("v_drive must be non-zero")


@dataclass(frozen=True)
class MeasurementSample:
    cell: tuple[int, int]
    kind: SchemeKind
    repetition: int
    reading: float
    noise_seed: int | None


@dataclass(frozen=True)
class ThresholdRule:
    """``|reading| > threshold`` maps to logical 1."""

    threshold: float

    def __post_init__(self):
        if not (self.threshold > 0 and math.isfinite(self.threshold)):
            raise ConfigError(f"threshold must be positive and finite, got {self.threshold}")

    def classify(self, readings) -> np.ndarray:
        return (np.abs(np.asarray(readings, dtype=float)) > self.threshold).astype(np.uint8)


def default_threshold(mix: ClassMix, params: BiasParams = BiasParams()) -> ThresholdRule:
    """Log-midpoint between the weakest on-state and strongest insulating current."""
    v = abs(params.v_drive)
    lo = mix.largest_insulating_conductance() * v
    hi = mix.smallest_on_conductance() * v
    return ThresholdRule(math.sqrt(lo * hi))


@dataclass(frozen=True)
class Response:
    bits: np.ndarray
    mask: np.ndarray

    def __post_init__(self):
        if len(self.bits) != len(self.mask):
            raise ConfigError("bits and mask lengths differ")

    def __len__(self):
        return len(self.bits)

    def __eq__(self, other):
        if not isinstance(other, Response):
            return NotImplemented
        return np.array_equal(self.bits, other.bits) and np.array_equal(self.mask, other.mask)

    @property
    def n_stable(self) -> int:
        return int(self.mask.sum())


@dataclass
class AttackTrace:
    """Per-cell probe samples in row-major order plus simulator-only ground truth."""

    kind: SchemeKind
    shape: tuple[int, int]
    samples: list[list[MeasurementSample]]
    truth: np.ndarray
    repetitions: int = field(init=False)

    def __post_init__(self):
        n_rows, n_cols = self.shape
        if len(self.samples) != n_rows * n_cols or len(self.truth) != n_rows * n_cols:
            raise ConfigError("trace must cover every cell")
        reps = {len(s) for s in self.samples}
        if len(reps) != 1:
            raise ConfigError("every cell must carry the same number of repetitions")
        self.repetitions = reps.pop()

    def readings(self) -> np.ndarray:
        """Array of shape ``(n_cells, repetitions)``."""
        return np.array([[s.reading for s in cell] for cell in self.samples], dtype=float)

    def mean_magnitudes(self) -> np.ndarray:
        return np.abs(self.readings()).mean(axis=1)


def _check_reps(repetitions: int) -> None:
    if repetitions < 1:
        raise ConfigError(f"repetitions must be >= 1, got {repetitions}")


def measure_cell(
    crossbar: Crossbar,
    kind: SchemeKind | str,
    cell: tuple[int, int],
    params: BiasParams = BiasParams(),
    repetitions: int = 10,
    seed: int = 0,
    noise: bool = True,
    purpose: int = seeding.PURPOSE_ATTACK,
) -> list[MeasurementSample]:
    """Apply one bias scheme ``repetitions`` times; noise seeds split per repetition."""
    _check_reps(repetitions)
    kind = SchemeKind(kind)
    row, col = cell
    scheme = make_bias_scheme(kind, cell, crossbar.shape, params.v_drive, params.v_gate_on)
    samples = []
    for rep in range(repetitions):
        ns = seeding.noise_seed(seed, purpose, kind.index, row, col, rep) if noise else None
        reading = evaluate_scheme(crossbar, scheme, ns).reading
        samples.append(MeasurementSample((row, col), kind, rep, reading, ns))
    return samples


def majority(bits: np.ndarray, axis: int = -1) -> np.ndarray:
    """Majority vote; ties resolve to 0."""
    bits = np.asarray(bits)
    return (2 * bits.sum(axis=axis) > bits.shape[axis]).astype(np.uint8)


def _read_bits(crossbar, rule, repetitions, seed, params, noise, purpose) -> np.ndarray:
    bits = np.empty(crossbar.n_cells, dtype=np.uint8)
    for i, (r, c) in enumerate(np.ndindex(crossbar.shape)):
        samples = measure_cell(
            crossbar, SchemeKind.REGULAR, (r, c), params, repetitions, seed, noise, purpose
        )
        bits[i] = majority(rule.classify([s.reading for s in samples]))
    return bits


def read_response(
    crossbar: Crossbar,
    rule: ThresholdRule,
    repetitions: int = 1,
    seed: int = 0,
    params: BiasParams = BiasParams(),
    noise: bool = True,
) -> Response:
    bits = _read_bits(crossbar, rule, repetitions, seed, params, noise, seeding.PURPOSE_READ)
    return Response(bits, np.ones_like(bits))


def enroll_mask(
    crossbar: Crossbar,
    rule: ThresholdRule,
    enrollment_reads: int = 10,
    repetitions: int = 1,
    seed: int = 0,
    params: BiasParams = BiasParams(),
    noise: bool = True,
) -> Response:
    """Read the array ``enrollment_reads`` times and mask every bit that ever flipped.

    Stable cells keep their unanimous value; unstable cells keep the majority
    value (ties to 0) but are masked out.
    """
    if enrollment_reads < 2:
        raise ConfigError(f"enrollment_reads must be >= 2, got {enrollment_reads}")
    reads = np.stack(
        [
            _read_bits(
                crossbar, rule, repetitions, seeding.sub_seed(seed, seeding.PURPOSE_ENROLL, k),
                params, noise, seeding.PURPOSE_ENROLL,
            )
            for k in range(enrollment_reads)
        ]
    )
    stable = np.all(reads == reads[0], axis=0)
    return Response(majority(reads, axis=0), stable.astype(np.uint8))


def run_attack_trace(
    crossbar: Crossbar,
    kind: SchemeKind | str,
    repetitions: int = 10,
    seed: int = 0,
    params: BiasParams = BiasParams(),
    noise: bool = True,
) -> AttackTrace:
    kind = SchemeKind(kind)
    if not kind.is_attack:
        raise ConfigError("the regular readout is not an attack kind")
    _check_reps(repetitions)
    samples = [
        measure_cell(crossbar, kind, (r, c), params, repetitions, seed, noise)
        for r, c in np.ndindex(crossbar.shape)
    ]
    return AttackTrace(kind, crossbar.shape, samples, crossbar.truth_bits())
