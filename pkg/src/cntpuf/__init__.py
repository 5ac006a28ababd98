"""Carbon-nanotube crossbar PUF simulator and leakage-probing attack toolkit."""

from cntpuf.device_model import CellClass, CellModel, ClassMix, ConfigError, LogRange
from cntpuf.crossbar import BiasScheme, Crossbar, LineCurrents, SchemeKind

__version__ = "0.1.0"

__all__ = [
    "BiasScheme",
    "CellClass",
    "CellModel",
    "ClassMix",
    "ConfigError",
    "Crossbar",
    "LineCurrents",
    "LogRange",
    "SchemeKind",
]
