"""Electrical model of a single CNT-FET crossbar cell.

The model is a two-state linear conductance: a cell conducts with ``g_on`` when
it is gated on and with ``g_off`` otherwise.  Metallic tubes ignore the gate,
semiconducting tubes switch on once ``|V_GS| >= v_th``, and cells without a
tube (insulating) sit at the picoampere leakage floor.  Gate leakage is a
separate conductance split evenly toward drain and source.

All current functions broadcast: ``cell`` may be a :class:`CellModel` with
scalar fields or any object exposing the same attribute names as arrays
(see :class:`cntpuf.crossbar.Crossbar`).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np


class ConfigError(ValueError):
    """Invalid model or scenario configuration."""


class CellClass(enum.IntEnum):
    INSULATING = 0
    SEMICONDUCTING = 1
    METALLIC = 2

    @property
    def bit(self) -> int:
        """Logical value under legitimate readout."""
        return 0 if self is CellClass.INSULATING else 1


@dataclass(frozen=True)
class LogRange:
    lo: float
    hi: float

    def validate(self, name: str) -> None:
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)):
            raise ConfigError(f"{name}: bounds must be finite")
        if self.lo < 0:
            raise ConfigError(f"{name}: lower bound must be >= 0")
        if self.lo > self.hi:
            raise ConfigError(f"{name}: lower bound {self.lo} exceeds upper bound {self.hi}")

    def overlaps(self, other: LogRange) -> bool:
        return self.lo <= other.hi and other.lo <= self.hi

    def draw_log_uniform(self, u: float) -> float:
        """Map a uniform ``u`` in [0, 1) onto the range, log-uniformly."""
        if self.lo == self.hi or self.lo == 0.0:
            # zero lower bound has no log; collapse to a plain uniform draw
            return self.lo + u * (self.hi - self.lo)
        value = math.exp(math.log(self.lo) + u * (math.log(self.hi) - math.log(self.lo)))
        return min(max(value, self.lo), self.hi)


@dataclass(frozen=True)
class CellModel:
    cls: CellClass
    g_on: float
    g_off: float
    g_gate: float
    v_th: float
    noise_sigma: float = 0.1

    def __post_init__(self):
        if min(self.g_on, self.g_off, self.g_gate) < 0:
            raise ConfigError("conductances must be >= 0")
        if self.noise_sigma < 0:
            raise ConfigError("noise_sigma must be >= 0")
        if not self.v_th > 0:
            raise ConfigError("v_th must be > 0")

    @property
    def bit(self) -> int:
        return CellClass(self.cls).bit


@dataclass(frozen=True)
class ClassMix:
    """Manufacturing-variation model: class probabilities and parameter ranges.

    ``g_on`` is shared by both conducting classes; a metallic cell uses its
    ``g_on`` draw for ``g_off`` too, so its off-state range equals ``g_on``.
    Insulating cells draw ``g_off`` from ``g_off_insulating`` and set
    ``g_on = g_off``.  ``v_th`` is drawn uniformly (volts), the conductances
    log-uniformly (siemens).
    """

    p_metallic: float = 0.02
    p_semiconducting: float = 0.48
    p_insulating: float = 0.50
    g_on: LogRange = LogRange(1e-7, 1e-5)
    g_off_semiconducting: LogRange = LogRange(1e-10, 1e-9)
    g_off_insulating: LogRange = LogRange(1e-13, 4e-12)
    g_gate: LogRange = LogRange(1e-13, 3e-12)
    v_th: LogRange = LogRange(0.8, 1.5)
    noise_sigma: float = 0.1
    allow_overlap: bool = False

    def __post_init__(self):
        self.validate()

    @property
    def probabilities(self) -> tuple[float, float, float]:
        """Probabilities ordered by :class:`CellClass` value."""
        return (self.p_insulating, self.p_semiconducting, self.p_metallic)

    def validate(self) -> None:
        for name, p in (
            ("p_metallic", self.p_metallic),
            ("p_semiconducting", self.p_semiconducting),
            ("p_insulating", self.p_insulating),
        ):
            if not (0.0 <= p <= 1.0):
                raise ConfigError(f"{name}: probability {p} outside [0, 1]")
        total = self.p_metallic + self.p_semiconducting + self.p_insulating
        if abs(total - 1.0) > 1e-12:
            raise ConfigError(
                f"p_metallic + p_semiconducting + p_insulating = {total!r}, must sum to 1"
            )
        for name in ("g_on", "g_off_semiconducting", "g_off_insulating", "g_gate"):
            getattr(self, name).validate(name)
        self.v_th.validate("v_th")
        if self.v_th.lo <= 0:
            raise ConfigError("v_th: lower bound must be > 0")
        if not (math.isfinite(self.noise_sigma) and self.noise_sigma >= 0):
            raise ConfigError("noise_sigma: must be finite and >= 0")
        if self.g_off_semiconducting.hi >= self.g_on.lo:
            raise ConfigError(
                "g_off_semiconducting: upper bound must lie below g_on lower bound"
            )
        if not self.allow_overlap:
            for name in ("g_on", "g_off_semiconducting"):
                if getattr(self, name).overlaps(self.g_off_insulating):
                    raise ConfigError(
                        f"{name}: overlaps g_off_insulating (set allow_overlap to permit)"
                    )

    def smallest_on_conductance(self) -> float:
        return self.g_on.lo

    def largest_insulating_conductance(self) -> float:
        return self.g_off_insulating.hi


def sample_cell(mix: ClassMix, seed) -> CellModel:
    """Draw one cell.

    ``seed`` is anything ``numpy.random.default_rng`` accepts.  Exactly five
    uniforms are consumed per cell (class, g_on, g_off, g_gate, v_th) whatever
    the class, so the parameter draws of a cell do not shift with its class.
    """
    mix.validate()
    u = np.random.default_rng(seed).random(5)
    cum = np.cumsum(mix.probabilities)
    idx = int(np.searchsorted(cum, u[0], side="right"))
    idx = min(idx, 2)
    # float round-off in cum can land past the last non-empty class
    while mix.probabilities[idx] == 0.0:
        idx -= 1
    cls = CellClass(idx)

    g_gate = mix.g_gate.draw_log_uniform(u[3])
    v_th = mix.v_th.lo + u[4] * (mix.v_th.hi - mix.v_th.lo)
    if cls is CellClass.METALLIC:
        g_on = g_off = mix.g_on.draw_log_uniform(u[1])
    elif cls is CellClass.SEMICONDUCTING:
        g_on = mix.g_on.draw_log_uniform(u[1])
        g_off = mix.g_off_semiconducting.draw_log_uniform(u[2])
    else:
        g_on = g_off = mix.g_off_insulating.draw_log_uniform(u[2])
    return CellModel(cls, g_on, g_off, g_gate, v_th, mix.noise_sigma)


def _scalar(x):
    return float(x) if np.ndim(x) == 0 else x


def is_on(cell, v_gate, v_source):
    """True where the channel conducts with ``g_on``."""
    cls = np.asarray(cell.cls)
    gated = np.abs(np.subtract(v_gate, v_source)) >= np.asarray(cell.v_th)
    return (cls == CellClass.METALLIC) | ((cls == CellClass.SEMICONDUCTING) & gated)


def effective_conductance(cell, v_gate, v_source):
    return np.where(is_on(cell, v_gate, v_source), cell.g_on, cell.g_off)


def cell_drain_current(cell, v_gate, v_drain, v_source, noise=None):
    """Channel current into the drain terminal, in amperes.

    ``noise`` is a standard-normal draw (or array of draws); ``None`` disables
    noise.  The multiplicative factor ``exp(noise_sigma * z)`` is positive, so
    the sign always follows ``v_drain - v_source``.
    """
    g = effective_conductance(cell, v_gate, v_source)
    current = g * np.subtract(v_drain, v_source)
    if noise is not None:
        current = current * np.exp(np.multiply(cell.noise_sigma, noise))
    return _scalar(current)


def gate_leak_split(cell, v_gate, v_drain, v_source, noise=None):
    """Gate-leak currents (toward drain, toward source) leaving the gate terminal."""
    half = np.multiply(cell.g_gate, 0.5)
    to_drain = half * np.subtract(v_gate, v_drain)
    to_source = half * np.subtract(v_gate, v_source)
    if noise is not None:
        factor = np.exp(np.multiply(cell.noise_sigma, noise))
        to_drain = to_drain * factor
        to_source = to_source * factor
    return _scalar(to_drain), _scalar(to_source)


def cell_gate_current(cell, v_gate, v_drain, v_source, noise=None):
    """Current into the gate terminal; depends on ``g_gate`` and voltages only."""
    to_drain, to_source = gate_leak_split(cell, v_gate, v_drain, v_source, noise)
    return _scalar(np.add(to_drain, to_source))
