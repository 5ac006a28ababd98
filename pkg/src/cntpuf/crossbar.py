"""Crossbar topology, bias schemes and DC line-current evaluation.

Wiring: row ``r`` is drain line ``r``, column ``c`` is source line ``c``, and
one global gate line reaches every cell.  Every line is pinned by an ideal
voltage source, so each cell's terminal voltages are known up front and the
array is solved by summing per-cell currents onto their lines.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace

import numpy as np

from cntpuf import seeding
from cntpuf.device_model import (
    CellClass,
    CellModel,
    ClassMix,
    ConfigError,
    cell_drain_current,
    gate_leak_split,
    sample_cell,
)

DRAIN = "drain"
SOURCE = "source"
GATE = "gate"


class SchemeKind(str, enum.Enum):
    REGULAR = "regular"
    GATE_LEAK = "gate-leak"
    GATE_LEAK_ALT = "gate-leak-alt"
    NONSEL_LEAK = "nonsel-leak"
    NONSEL_LEAK_SELGND = "nonsel-leak-selgnd"
    NONSEL_LEAK_OTHERSGND = "nonsel-leak-othersgnd"
    DRAIN_LEAK = "drain-leak"

    @property
    def index(self) -> int:
        return list(SchemeKind).index(self)

    @property
    def is_attack(self) -> bool:
        return self is not SchemeKind.REGULAR


ATTACK_KINDS = tuple(k for k in SchemeKind if k.is_attack)
NONSEL_KINDS = (
    SchemeKind.NONSEL_LEAK,
    SchemeKind.NONSEL_LEAK_SELGND,
    SchemeKind.NONSEL_LEAK_OTHERSGND,
)


@dataclass(frozen=True, eq=False)
class Crossbar:
    """Grid of cells stored as per-parameter ``(n_rows, n_cols)`` arrays.

    The array attributes carry the same names as :class:`CellModel` fields,
    so the device-model current functions evaluate the whole grid at once.
    """

    cls: np.ndarray
    g_on: np.ndarray
    g_off: np.ndarray
    g_gate: np.ndarray
    v_th: np.ndarray
    noise_sigma: np.ndarray

    def __post_init__(self):
        shape = self.cls.shape
        if len(shape) != 2 or shape[0] < 1 or shape[1] < 1:
            raise ConfigError(f"crossbar must be a non-empty 2-D grid, got shape {shape}")
        for name in ("g_on", "g_off", "g_gate", "v_th", "noise_sigma"):
            if getattr(self, name).shape != shape:
                raise ConfigError(f"{name} has shape {getattr(self, name).shape}, expected {shape}")
        for name in ("cls", "g_on", "g_off", "g_gate", "v_th", "noise_sigma"):
            getattr(self, name).setflags(write=False)

    @property
    def shape(self) -> tuple[int, int]:
        return self.cls.shape

    @property
    def n_rows(self) -> int:
        return self.cls.shape[0]

    @property
    def n_cols(self) -> int:
        return self.cls.shape[1]

    @property
    def n_cells(self) -> int:
        return self.cls.size

    def cell(self, row: int, col: int) -> CellModel:
        return CellModel(
            CellClass(int(self.cls[row, col])),
            float(self.g_on[row, col]),
            float(self.g_off[row, col]),
            float(self.g_gate[row, col]),
            float(self.v_th[row, col]),
            float(self.noise_sigma[row, col]),
        )

    def cells(self) -> list[list[CellModel]]:
        return [[self.cell(r, c) for c in range(self.n_cols)] for r in range(self.n_rows)]

    def with_cell(self, row: int, col: int, cell: CellModel) -> Crossbar:
        """Copy of this crossbar with one cell replaced."""
        arrays = {}
        for name in ("cls", "g_on", "g_off", "g_gate", "v_th", "noise_sigma"):
            a = getattr(self, name).copy()
            a[row, col] = getattr(cell, name)
            arrays[name] = a
        return Crossbar(**arrays)

    def truth_bits(self) -> np.ndarray:
        """Legitimate logical value of every cell, row-major."""
        return (self.cls != CellClass.INSULATING).astype(np.uint8).ravel()

    def __eq__(self, other):
        if not isinstance(other, Crossbar):
            return NotImplemented
        return all(
            np.array_equal(getattr(self, n), getattr(other, n))
            for n in ("cls", "g_on", "g_off", "g_gate", "v_th", "noise_sigma")
        )

    @classmethod
    def from_cells(cls, grid: list[list[CellModel]]) -> Crossbar:
        def field(name, dtype):
            return np.array([[getattr(c, name) for c in row] for row in grid], dtype=dtype)

        return cls(
            field("cls", np.int8),
            field("g_on", float),
            field("g_off", float),
            field("g_gate", float),
            field("v_th", float),
            field("noise_sigma", float),
        )


def build_crossbar(mix: ClassMix, n_rows: int = 12, n_cols: int = 12, seed: int = 0) -> Crossbar:
    """Sample a crossbar; cell ``(r, c)`` uses ``seeding.cell_seed(seed, r, c)``."""
    if n_rows < 1 or n_cols < 1:
        raise ConfigError(f"crossbar dimensions must be >= 1, got {n_rows}x{n_cols}")
    mix.validate()
    grid = [
        [sample_cell(mix, seeding.cell_seed(seed, r, c)) for c in range(n_cols)]
        for r in range(n_rows)
    ]
    return Crossbar.from_cells(grid)


@dataclass(frozen=True)
class BiasScheme:
    """Potentials on every line plus the signed set of measured lines.

    ``ammeter`` entries are ``((role, index), sign)`` with role one of
    ``"drain"``, ``"source"``, ``"gate"``; the reading is the signed sum of
    those line currents (current from the line into the array is positive).
    """

    kind: SchemeKind
    selected: tuple[int, int]
    v_gate: float
    drain_line_voltages: tuple[float, ...]
    source_line_voltages: tuple[float, ...]
    ammeter: tuple[tuple[tuple[str, int], int], ...]

    def __post_init__(self):
        r, c = self.selected
        if not (0 <= r < len(self.drain_line_voltages) and 0 <= c < len(self.source_line_voltages)):
            raise ConfigError(f"selected cell {self.selected} outside the grid")
        if not self.ammeter:
            raise ConfigError("ammeter set must be non-empty")
        potentials = (self.v_gate, *self.drain_line_voltages, *self.source_line_voltages)
        if not np.all(np.isfinite(potentials)):
            raise ConfigError("line potentials must be finite")

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.drain_line_voltages), len(self.source_line_voltages)

    def negated(self) -> BiasScheme:
        return replace(
            self,
            v_gate=-self.v_gate,
            drain_line_voltages=tuple(-v for v in self.drain_line_voltages),
            source_line_voltages=tuple(-v for v in self.source_line_voltages),
        )

    def ammeter_roles(self) -> set[str]:
        return {role for (role, _), _ in self.ammeter}


def make_bias_scheme(
    kind: SchemeKind | str,
    selected: tuple[int, int],
    shape: tuple[int, int] = (12, 12),
    v_drive: float = 0.5,
    v_gate_on: float = 2.0,
) -> BiasScheme:
    """Line assignment for the regular readout or one of the probing attacks."""
    kind = SchemeKind(kind)
    n_rows, n_cols = shape
    row, col = selected
    if not (0 <= row < n_rows and 0 <= col < n_cols):
        raise ConfigError(f"selected cell {selected} outside {n_rows}x{n_cols} grid")
    if v_drive == 0:
        raise ConfigError("v_drive must be non-zero")

    others = 0.0 if kind is SchemeKind.NONSEL_LEAK_OTHERSGND else v_drive
    drains = [others] * n_rows
    sources = [others] * n_cols
    sources[col] = 0.0
    drains[row] = v_drive
    v_gate = 0.0

    if kind is SchemeKind.REGULAR:
        v_gate = v_gate_on
    elif kind in (SchemeKind.GATE_LEAK, SchemeKind.GATE_LEAK_ALT):
        v_gate = v_gate_on
        drains[row] = 0.0
        if kind is SchemeKind.GATE_LEAK_ALT:
            sources = [0.0] * n_cols
    elif kind is SchemeKind.NONSEL_LEAK_SELGND:
        drains[row] = 0.0

    if kind in (SchemeKind.REGULAR, SchemeKind.DRAIN_LEAK):
        ammeter = (((DRAIN, row), 1),)
    elif kind in (SchemeKind.GATE_LEAK, SchemeKind.GATE_LEAK_ALT):
        ammeter = (((GATE, 0), 1),)
    else:
        ammeter = tuple(((DRAIN, r), 1) for r in range(n_rows) if r != row) + tuple(
            ((SOURCE, c), 1) for c in range(n_cols) if c != col
        )
    return BiasScheme(kind, (row, col), float(v_gate), tuple(drains), tuple(sources), ammeter)


@dataclass(frozen=True)
class LineCurrents:
    """DC currents from each line's voltage source into the array."""

    drain: np.ndarray
    source: np.ndarray
    gate: float
    reading: float

    def total(self) -> float:
        return float(self.drain.sum() + self.source.sum() + self.gate)

    def abs_total(self) -> float:
        return float(np.abs(self.drain).sum() + np.abs(self.source).sum() + abs(self.gate))

    def line(self, role: str, index: int = 0) -> float:
        if role == DRAIN:
            return float(self.drain[index])
        if role == SOURCE:
            return float(self.source[index])
        if role == GATE:
            return float(self.gate)
        raise ValueError(f"unknown line role {role!r}")


def evaluate_scheme(crossbar: Crossbar, scheme: BiasScheme, noise_seed: int | None = None) -> LineCurrents:
    """Solve the array under ``scheme``; noiseless when ``noise_seed`` is None."""
    if scheme.shape != crossbar.shape:
        raise ConfigError(f"scheme is for a {scheme.shape} grid, crossbar is {crossbar.shape}")
    vd = np.asarray(scheme.drain_line_voltages)[:, None]
    vs = np.asarray(scheme.source_line_voltages)[None, :]
    vg = scheme.v_gate

    z_channel = z_gate = None
    if noise_seed is not None:
        z_channel, z_gate = np.random.default_rng(noise_seed).standard_normal((2, *crossbar.shape))

    i_channel = cell_drain_current(crossbar, vg, vd, vs, z_channel)
    leak_d, leak_s = gate_leak_split(crossbar, vg, vd, vs, z_gate)
    i_channel = np.broadcast_to(i_channel, crossbar.shape)

    drain = (i_channel - leak_d).sum(axis=1)
    source = (-i_channel - leak_s).sum(axis=0)
    gate = float((leak_d + leak_s).sum())

    reading = 0.0
    for (role, idx), sign in scheme.ammeter:
        if role == DRAIN:
            reading += sign * drain[idx]
        elif role == SOURCE:
            reading += sign * source[idx]
        else:
            reading += sign * gate
    return LineCurrents(drain, source, gate, float(reading))
