"""Scenario configuration, probe-access gating and file formats.

Scenarios are YAML.  Only ``rows``, ``cols`` and ``seed`` are required; every
other key falls back to the defaults below.  Example::

    rows: 12
    cols: 12
    seed: 7
    noise_sigma: 0.1
    v_drive: 0.5
    probe_access: [source-lines, gate-line]
    mix:
      p_metallic: 0.02
      p_semiconducting: 0.48
      p_insulating: 0.5
      g_off_insulating: [1.0e-13, 4.0e-12]

Trace files are CSV preceded by ``#``-prefixed ``key: value`` header lines;
crossbar, response and report files are JSON.  All carry ``format_version``
and the scenario hash.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import yaml

from cntpuf.analysis import AttackReport
from cntpuf.crossbar import DRAIN, GATE, SOURCE, BiasScheme, Crossbar, SchemeKind, build_crossbar
from cntpuf.device_model import ClassMix, ConfigError, LogRange
from cntpuf.procedures import (
    AttackTrace,
    BiasParams,
    MeasurementSample,
    Response,
    ThresholdRule,
    default_threshold,
)

FORMAT_VERSION = 1

PROBE_ROLES = ("drain-lines", "source-lines", "gate-line")
_ROLE_OF_LINE = {DRAIN: "drain-lines", SOURCE: "source-lines", GATE: "gate-line"}

_RANGE_KEYS = ("g_on", "g_off_semiconducting", "g_off_insulating", "g_gate", "v_th")
_PROB_KEYS = ("p_metallic", "p_semiconducting", "p_insulating")


class ScenarioError(ConfigError):
    """Scenario validation failure; the message starts with the key path."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


class FileFormatError(ValueError):
    pass


@dataclass(frozen=True)
class Scenario:
    rows: int
    cols: int
    seed: int
    mix: ClassMix = field(default_factory=ClassMix)
    v_drive: float = 0.5
    v_gate_on: float = 2.0
    repetitions: int = 10
    read_repetitions: int = 1
    enrollment_reads: int = 10
    threshold: float | None = None
    min_ratio: float = 2.0
    probe_access: tuple[str, ...] = PROBE_ROLES

    @property
    def noise_sigma(self) -> float:
        return self.mix.noise_sigma

    @property
    def params(self) -> BiasParams:
        return BiasParams(self.v_drive, self.v_gate_on)

    def rule(self) -> ThresholdRule:
        if self.threshold is not None:
            return ThresholdRule(self.threshold)
        return default_threshold(self.mix, self.params)

    def crossbar(self) -> Crossbar:
        return build_crossbar(self.mix, self.rows, self.cols, self.seed)

    def to_dict(self) -> dict:
        mix = asdict(self.mix)
        noise_sigma = mix.pop("noise_sigma")
        for key in _RANGE_KEYS:
            mix[key] = [mix[key]["lo"], mix[key]["hi"]]
        return {
            "rows": self.rows,
            "cols": self.cols,
            "seed": self.seed,
            "noise_sigma": noise_sigma,
            "v_drive": self.v_drive,
            "v_gate_on": self.v_gate_on,
            "repetitions": self.repetitions,
            "read_repetitions": self.read_repetitions,
            "enrollment_reads": self.enrollment_reads,
            "threshold": self.threshold,
            "min_ratio": self.min_ratio,
            "probe_access": sorted(self.probe_access, key=PROBE_ROLES.index),
            "mix": mix,
        }

    def hash(self) -> str:
        """SHA-256 over the canonical JSON of every semantic field."""
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


_TOP_KEYS = {
    "rows", "cols", "seed", "noise_sigma", "v_drive", "v_gate_on", "repetitions",
    "read_repetitions", "enrollment_reads", "threshold", "min_ratio", "probe_access", "mix",
}
_MIX_KEYS = set(_PROB_KEYS) | set(_RANGE_KEYS) | {"allow_overlap"}


def _int(d, key, path, default=None, minimum=None):
    if key not in d:
        if default is None:
            raise ScenarioError(f"{path}{key}", "missing required field")
        return default
    v = d[key]
    if isinstance(v, bool) or not isinstance(v, int):
        raise ScenarioError(f"{path}{key}", f"expected an integer, got {v!r}")
    if minimum is not None and v < minimum:
        raise ScenarioError(f"{path}{key}", f"must be >= {minimum}, got {v}")
    return v


def _float(d, key, path, default):
    if key not in d:
        return default
    v = d[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ScenarioError(f"{path}{key}", f"expected a number, got {v!r}")
    v = float(v)
    if not math.isfinite(v):
        raise ScenarioError(f"{path}{key}", "must be finite")
    return v


def _range(d, key, path, default: LogRange) -> LogRange:
    if key not in d:
        return default
    v = d[key]
    if (
        not isinstance(v, (list, tuple))
        or len(v) != 2
        or any(isinstance(x, bool) or not isinstance(x, (int, float)) for x in v)
    ):
        raise ScenarioError(f"{path}{key}", f"expected [lower, upper], got {v!r}")
    lo, hi = float(v[0]), float(v[1])
    if lo > hi:
        raise ScenarioError(f"{path}{key}", f"lower bound {lo} exceeds upper bound {hi}")
    return LogRange(lo, hi)


def _unknown(d, allowed, path):
    extra = sorted(set(d) - allowed)
    if extra:
        raise ScenarioError(f"{path}{extra[0]}", "unknown key")


def scenario_from_dict(data) -> Scenario:
    if not isinstance(data, dict):
        raise ScenarioError("<root>", "expected a mapping")
    _unknown(data, _TOP_KEYS, "")
    defaults = Scenario(1, 1, 0)
    mix_data = data.get("mix", {}) or {}
    if not isinstance(mix_data, dict):
        raise ScenarioError("mix", "expected a mapping")
    _unknown(mix_data, _MIX_KEYS, "mix.")

    dm = ClassMix()
    probs = {k: _float(mix_data, k, "mix.", getattr(dm, k)) for k in _PROB_KEYS}
    for k, p in probs.items():
        if not 0.0 <= p <= 1.0:
            raise ScenarioError(f"mix.{k}", f"probability {p} outside [0, 1]")
    total = sum(probs.values())
    if abs(total - 1.0) > 1e-12:
        named = next(k for k in _PROB_KEYS if k in mix_data) if any(
            k in mix_data for k in _PROB_KEYS
        ) else "p_insulating"
        raise ScenarioError(f"mix.{named}", f"class probabilities sum to {total!r}, must sum to 1")
    ranges = {k: _range(mix_data, k, "mix.", getattr(dm, k)) for k in _RANGE_KEYS}
    allow_overlap = mix_data.get("allow_overlap", dm.allow_overlap)
    if not isinstance(allow_overlap, bool):
        raise ScenarioError("mix.allow_overlap", f"expected true/false, got {allow_overlap!r}")
    noise_sigma = _float(data, "noise_sigma", "", dm.noise_sigma)
    if noise_sigma < 0:
        raise ScenarioError("noise_sigma", "must be >= 0")
    try:
        mix = ClassMix(**probs, **ranges, noise_sigma=noise_sigma, allow_overlap=allow_overlap)
    except ConfigError as e:
        raise ScenarioError("mix", str(e)) from None

    v_drive = _float(data, "v_drive", "", defaults.v_drive)
    if v_drive == 0:
        raise ScenarioError("v_drive", "must be non-zero")
    threshold = data.get("threshold")
    if threshold is not None:
        threshold = _float(data, "threshold", "", None)
        if threshold <= 0:
            raise ScenarioError("threshold", "must be > 0")
    min_ratio = _float(data, "min_ratio", "", defaults.min_ratio)
    if min_ratio < 1:
        raise ScenarioError("min_ratio", "must be >= 1")

    access = data.get("probe_access", list(PROBE_ROLES))
    if not isinstance(access, (list, tuple)) or not access:
        raise ScenarioError("probe_access", "expected a non-empty list of line roles")
    for role in access:
        if role not in PROBE_ROLES:
            raise ScenarioError("probe_access", f"unknown line role {role!r}; choose from {PROBE_ROLES}")

    return Scenario(
        rows=_int(data, "rows", "", minimum=1),
        cols=_int(data, "cols", "", minimum=1),
        seed=_int(data, "seed", "", minimum=0),
        mix=mix,
        v_drive=v_drive,
        v_gate_on=_float(data, "v_gate_on", "", defaults.v_gate_on),
        repetitions=_int(data, "repetitions", "", defaults.repetitions, minimum=1),
        read_repetitions=_int(data, "read_repetitions", "", defaults.read_repetitions, minimum=1),
        enrollment_reads=_int(data, "enrollment_reads", "", defaults.enrollment_reads, minimum=2),
        threshold=threshold,
        min_ratio=min_ratio,
        probe_access=tuple(sorted(set(access), key=PROBE_ROLES.index)),
    )


def load_scenario(source) -> Scenario:
    """Parse a scenario from a path or from YAML text."""
    is_path = isinstance(source, Path) or (
        isinstance(source, str) and "\n" not in source and (":" not in source or Path(source).is_file())
    )
    if is_path:
        path = Path(source)
        try:
            text = path.read_text()
        except OSError as e:
            raise ScenarioError(str(path), f"cannot read: {e.strerror}") from None
    else:
        text = source
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as e:
        raise ScenarioError("<root>", f"malformed YAML: {e}") from None
    return scenario_from_dict(data)


def dump_scenario(scenario: Scenario) -> str:
    return yaml.safe_dump(scenario.to_dict(), sort_keys=False)


@dataclass(frozen=True)
class AccessCheck:
    permitted: bool
    required: frozenset
    missing: frozenset

    def __bool__(self):
        return self.permitted


def required_roles(scheme: BiasScheme) -> frozenset:
    """Line roles an external prober must contact to realise ``scheme``.

    A role is needed when it carries an ammeter line or when any of its lines
    must sit away from the unpowered idle state (0 V).
    """
    roles = {_ROLE_OF_LINE[role] for role in scheme.ammeter_roles()}
    if any(v != 0 for v in scheme.drain_line_voltages):
        roles.add("drain-lines")
    if any(v != 0 for v in scheme.source_line_voltages):
        roles.add("source-lines")
    if scheme.v_gate != 0:
        roles.add("gate-line")
    return frozenset(roles)


def check_probe_access(scenario_or_access, scheme: BiasScheme) -> AccessCheck:
    access = getattr(scenario_or_access, "probe_access", scenario_or_access)
    need = required_roles(scheme)
    missing = need - set(access)
    return AccessCheck(not missing, need, frozenset(missing))


def _header(scenario_hash: str | None, master_seed: int | None) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "scenario_hash": scenario_hash or "",
        "master_seed": master_seed,
    }


def _write_text(path, text: str) -> None:
    try:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    except OSError as e:
        raise OSError(f"{path}: cannot write: {e.strerror}") from None


def _read_text(path) -> str:
    try:
        return Path(path).read_text()
    except OSError as e:
        raise OSError(f"{path}: cannot read: {e.strerror}") from None


def _bitstring(bits) -> str:
    return "".join(str(int(b)) for b in bits)


def _parse_bits(s: str) -> np.ndarray:
    if s and set(s) - {"0", "1"}:
        raise FileFormatError(f"bad bit string {s!r}")
    return np.array([int(ch) for ch in s], dtype=np.uint8)


TRACE_COLUMNS = ("row", "col", "kind", "repetition", "reading", "seed")


def format_trace(trace: AttackTrace, scenario_hash: str | None = None, master_seed: int | None = None) -> str:
    buf = io.StringIO()
    head = _header(scenario_hash, master_seed)
    head.update(
        kind=trace.kind.value,
        shape=f"{trace.shape[0]}x{trace.shape[1]}",
        repetitions=trace.repetitions,
        truth=_bitstring(trace.truth),
    )
    buf.write("# cntpuf-trace\n")
    for k, v in head.items():
        buf.write(f"# {k}: {'' if v is None else v}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRACE_COLUMNS)
    for cell in trace.samples:
        for s in cell:
            w.writerow(
                (s.cell[0], s.cell[1], s.kind.value, s.repetition, repr(float(s.reading)),
                 "" if s.noise_seed is None else s.noise_seed)
            )
    return buf.getvalue()


def export_trace(trace: AttackTrace, path, scenario_hash: str | None = None, master_seed: int | None = None) -> None:
    _write_text(path, format_trace(trace, scenario_hash, master_seed))


def parse_trace(text: str) -> tuple[AttackTrace, dict]:
    lines = text.splitlines()
    if not lines or lines[0] != "# cntpuf-trace":
        raise FileFormatError("not a cntpuf trace file")
    head = {}
    i = 1
    while i < len(lines) and lines[i].startswith("# "):
        key, _, value = lines[i][2:].partition(": ")
        head[key] = value
        i += 1
    if int(head.get("format_version", -1)) != FORMAT_VERSION:
        raise FileFormatError(f"unsupported trace format_version {head.get('format_version')!r}")
    rows = list(csv.reader(lines[i:]))
    if not rows or tuple(rows[0]) != TRACE_COLUMNS:
        raise FileFormatError("missing trace column header")
    n_rows, n_cols = (int(x) for x in head["shape"].split("x"))
    kind = SchemeKind(head["kind"])
    cells: dict[tuple[int, int], list[MeasurementSample]] = {}
    for rec in rows[1:]:
        r, c, k, rep, reading, seed = rec
        cells.setdefault((int(r), int(c)), []).append(
            MeasurementSample(
                (int(r), int(c)), SchemeKind(k), int(rep), float(reading),
                int(seed) if seed else None,
            )
        )
    samples = []
    for r in range(n_rows):
        for c in range(n_cols):
            if (r, c) not in cells:
                raise FileFormatError(f"trace lacks cell ({r}, {c})")
            samples.append(sorted(cells[(r, c)], key=lambda s: s.repetition))
    trace = AttackTrace(kind, (n_rows, n_cols), samples, _parse_bits(head["truth"]))
    meta = {
        "format_version": FORMAT_VERSION,
        "scenario_hash": head.get("scenario_hash") or None,
        "master_seed": int(head["master_seed"]) if head.get("master_seed") else None,
    }
    return trace, meta


def load_trace(path) -> tuple[AttackTrace, dict]:
    try:
        return parse_trace(_read_text(path))
    except (FileFormatError, KeyError, ValueError) as e:
        raise FileFormatError(f"{path}: {e}") from None


def _dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def report_to_dict(report: AttackReport) -> dict:
    return {
        "kind": report.kind.value,
        "threshold": report.threshold,
        "separable": report.separable,
        "predicted": _bitstring(report.predicted),
        "accuracy_truth": report.accuracy_truth,
        "accuracy_response": report.accuracy_response,
        "distinguishability": report.distinguishability,
    }


def report_from_dict(d: dict) -> AttackReport:
    return AttackReport(
        SchemeKind(d["kind"]),
        float(d["threshold"]),
        bool(d["separable"]),
        _parse_bits(d["predicted"]),
        float(d["accuracy_truth"]),
        None if d["accuracy_response"] is None else float(d["accuracy_response"]),
        float(d["distinguishability"]),
    )


def format_reports(reports, scenario_hash=None, master_seed=None) -> str:
    if isinstance(reports, AttackReport):
        reports = [reports]
    doc = _header(scenario_hash, master_seed)
    doc["type"] = "attack-reports"
    doc["reports"] = [report_to_dict(r) for r in reports]
    return _dump_json(doc)


def export_report(reports, path, scenario_hash=None, master_seed=None) -> None:
    _write_text(path, format_reports(reports, scenario_hash, master_seed))


def _load_json(path, expected_type: str) -> dict:
    text = _read_text(path)
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise FileFormatError(f"{path}: malformed JSON: {e}") from None
    if doc.get("format_version") != FORMAT_VERSION:
        raise FileFormatError(f"{path}: unsupported format_version {doc.get('format_version')!r}")
    if doc.get("type") != expected_type:
        raise FileFormatError(f"{path}: expected a {expected_type} file, got {doc.get('type')!r}")
    return doc


def load_reports(path) -> tuple[list[AttackReport], dict]:
    doc = _load_json(path, "attack-reports")
    return [report_from_dict(d) for d in doc["reports"]], doc


def format_response(response: Response, scenario_hash=None, master_seed=None, metrics: dict | None = None) -> str:
    doc = _header(scenario_hash, master_seed)
    doc.update(type="response", bits=_bitstring(response.bits), mask=_bitstring(response.mask))
    if metrics is not None:
        doc["metrics"] = metrics
    return _dump_json(doc)


def export_response(response: Response, path, scenario_hash=None, master_seed=None, metrics=None) -> None:
    _write_text(path, format_response(response, scenario_hash, master_seed, metrics))


def load_response(path) -> tuple[Response, dict]:
    doc = _load_json(path, "response")
    return Response(_parse_bits(doc["bits"]), _parse_bits(doc["mask"])), doc


_CROSSBAR_FIELDS = ("cls", "g_on", "g_off", "g_gate", "v_th", "noise_sigma")


def format_crossbar(crossbar: Crossbar, scenario_hash=None, master_seed=None) -> str:
    doc = _header(scenario_hash, master_seed)
    doc.update(type="crossbar", shape=list(crossbar.shape))
    for name in _CROSSBAR_FIELDS:
        doc[name] = getattr(crossbar, name).tolist()
    return _dump_json(doc)


def export_crossbar(crossbar: Crossbar, path, scenario_hash=None, master_seed=None) -> None:
    _write_text(path, format_crossbar(crossbar, scenario_hash, master_seed))


def load_crossbar(path) -> tuple[Crossbar, dict]:
    doc = _load_json(path, "crossbar")
    arrays = {
        name: np.array(doc[name], dtype=np.int8 if name == "cls" else float)
        for name in _CROSSBAR_FIELDS
    }
    xb = Crossbar(**arrays)
    if list(xb.shape) != doc["shape"]:
        raise FileFormatError(f"{path}: shape field disagrees with cell data")
    return xb, doc
