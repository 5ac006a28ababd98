"""Command-line front end.

    cntpuf generate --config scenario.yaml --out crossbar.json
    cntpuf readout  --config scenario.yaml --out response.json [--enroll-reads 10]
    cntpuf enroll   --config scenario.yaml --out enrolled.json
    cntpuf attack   --config scenario.yaml --kind drain-leak --trace-out t.csv --report-out r.json
    cntpuf analyze  --trace t.csv [--response response.json] --out r.json
    cntpuf report   --trace t.csv [--cell 0,0 ...] [--series-out s.csv] [--summary-out m.csv]

``--config`` defaults to the path in ``$CNTPUF_CONFIG``.
"""

from __future__ import annotations

import argparse
import csv
import io
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from cntpuf import seeding
from cntpuf.analysis import build_attack_report, metrics_report
from cntpuf.crossbar import ATTACK_KINDS, SchemeKind, make_bias_scheme
from cntpuf.device_model import ConfigError
from cntpuf.procedures import enroll_mask, read_response, run_attack_trace
from cntpuf.scenario_io import (
    FileFormatError,
    Scenario,
    check_probe_access,
    export_crossbar,
    export_report,
    export_response,
    export_trace,
    format_reports,
    load_crossbar,
    load_reports,
    load_response,
    load_scenario,
    load_trace,
)

CONFIG_ENV = "CNTPUF_CONFIG"

EXIT_ERROR = 1
EXIT_USAGE = 2
EXIT_BLOCKED = 3


class UsageError(Exception):
    pass


class BlockedError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _scenario(args) -> Scenario:
    path = args.config or os.environ.get(CONFIG_ENV)
    if not path:
        raise UsageError(f"no scenario: pass --config or set ${CONFIG_ENV}")
    scenario = load_scenario(Path(path))
    if args.seed is not None:
        scenario = replace(scenario, seed=args.seed)
    return scenario


def _crossbar(args, scenario):
    if getattr(args, "crossbar", None):
        xb, _ = load_crossbar(args.crossbar)
        if xb.shape != (scenario.rows, scenario.cols):
            raise ConfigError(f"{args.crossbar}: shape {xb.shape} does not match scenario")
        return xb
    return scenario.crossbar()


def _metrics_dict(m) -> dict:
    return {
        "hamming_weight": m.hamming_weight,
        "mean_entropy": float(np.mean(m.entropy)),
        "mean_intra_hd": None if not m.intra_hd else m.mean_intra_hd,
        "intra_hd": m.intra_hd,
    }


def cmd_generate(args, out):
    scenario = _scenario(args)
    xb = scenario.crossbar()
    export_crossbar(xb, args.out, scenario.hash(), scenario.seed)
    counts = np.bincount(xb.cls.ravel(), minlength=3)
    print(
        f"crossbar {xb.n_rows}x{xb.n_cols}: insulating={counts[0]} "
        f"semiconducting={counts[1]} metallic={counts[2]} -> {args.out}",
        file=out,
    )


def _legit_response(scenario, xb, enroll_reads=None):
    if enroll_reads:
        return enroll_mask(
            xb, scenario.rule(), enroll_reads, scenario.read_repetitions, scenario.seed, scenario.params
        )
    return read_response(xb, scenario.rule(), scenario.read_repetitions, scenario.seed, scenario.params)


def _readout(args, out, enroll_reads):
    scenario = _scenario(args)
    xb = _crossbar(args, scenario)
    resp = _legit_response(scenario, xb, enroll_reads)
    rereads = [
        read_response(
            xb, scenario.rule(), scenario.read_repetitions,
            seeding.sub_seed(scenario.seed, seeding.PURPOSE_READ, k + 1), scenario.params,
        ).bits
        for k in range(args.rereads)
    ]
    mask = resp.mask if resp.n_stable else None
    metrics = _metrics_dict(metrics_report(resp.bits, rereads, mask=mask))
    export_response(resp, args.out, scenario.hash(), scenario.seed, metrics)
    print(
        f"response {len(resp)} bits, stable {resp.n_stable}, "
        f"hamming weight {metrics['hamming_weight']:.4f}"
        + ("" if metrics["mean_intra_hd"] is None else f", mean intra-HD {metrics['mean_intra_hd']:.4f}")
        + f" -> {args.out}",
        file=out,
    )


def cmd_readout(args, out):
    _readout(args, out, args.enroll_reads)


def cmd_enroll(args, out):
    scenario = _scenario(args)
    _readout(args, out, args.enroll_reads or scenario.enrollment_reads)


def cmd_attack(args, out):
    scenario = _scenario(args)
    kind = SchemeKind(args.kind)
    check = check_probe_access(scenario, make_bias_scheme(kind, (0, 0), (scenario.rows, scenario.cols),
                                                          scenario.v_drive, scenario.v_gate_on))
    if not check:
        raise BlockedError(
            f"{kind.value} attack blocked by countermeasure: needs probe access to "
            f"{', '.join(sorted(check.missing))}"
        )
    xb = _crossbar(args, scenario)
    reps = args.repetitions or scenario.repetitions
    trace = run_attack_trace(xb, kind, reps, scenario.seed, scenario.params)
    response = _legit_response(scenario, xb)
    report = build_attack_report(trace, response, scenario.min_ratio)
    export_trace(trace, args.trace_out, scenario.hash(), scenario.seed)
    if args.report_out:
        export_report(report, args.report_out, scenario.hash(), scenario.seed)
    print(
        f"{kind.value}: threshold {report.threshold:.4g} A "
        f"({'separable' if report.separable else 'non-separable'}), "
        f"accuracy vs response {report.accuracy_response:.4f}, "
        f"vs truth {report.accuracy_truth:.4f}, "
        f"distinguishability {report.distinguishability:.4f}",
        file=out,
    )


def cmd_analyze(args, out):
    reports = []
    meta = {}
    response = None
    if args.response:
        response, _ = load_response(args.response)
    for path in args.trace:
        trace, meta = load_trace(path)
        if response is not None and len(response) != len(trace.samples):
            raise ConfigError(f"{args.response}: length does not match {path}")
        reports.append(build_attack_report(trace, response, args.min_ratio))
    text = format_reports(reports, meta.get("scenario_hash"), meta.get("master_seed"))
    _emit(text, args.out, out)


def _emit(text, path, out):
    if path:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    else:
        out.write(text)


def _parse_cell(s: str) -> tuple[int, int]:
    try:
        r, c = (int(x) for x in s.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected ROW,COL, got {s!r}") from None
    return r, c


def _default_cells(trace, per_class=2) -> list[tuple[int, int]]:
    n_cols = trace.shape[1]
    ones = [i for i, b in enumerate(trace.truth) if b == 1][:per_class]
    zeros = [i for i, b in enumerate(trace.truth) if b == 0][:per_class]
    return [divmod(i, n_cols) for i in ones + zeros]


SERIES_COLUMNS = ("trace", "kind", "cell", "row", "col", "truth", "repetition", "reading")
SUMMARY_COLUMNS = (
    "kind", "threshold", "separable", "accuracy_truth", "accuracy_response", "distinguishability",
)


def cmd_report(args, out):
    traces = [(path, *load_trace(path)) for path in args.trace]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SERIES_COLUMNS)
    for path, trace, _ in traces:
        cells = args.cell or _default_cells(trace)
        n_rows, n_cols = trace.shape
        for r, c in cells:
            if not (0 <= r < n_rows and 0 <= c < n_cols):
                raise ConfigError(f"cell ({r}, {c}) outside {n_rows}x{n_cols} trace")
            i = r * n_cols + c
            for s in trace.samples[i]:
                w.writerow((path, trace.kind.value, f"r{r}c{c}", r, c, int(trace.truth[i]),
                            s.repetition, repr(s.reading)))
    _emit(buf.getvalue(), args.series_out, out)

    if args.reports:
        reports = [r for path in args.reports for r in load_reports(path)[0]]
    else:
        response = load_response(args.response)[0] if args.response else None
        reports = [build_attack_report(t, response) for _, t, _ in traces]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SUMMARY_COLUMNS)
    for rep in reports:
        w.writerow((
            rep.kind.value, repr(rep.threshold), int(rep.separable), repr(rep.accuracy_truth),
            "" if rep.accuracy_response is None else repr(rep.accuracy_response),
            repr(rep.distinguishability),
        ))
    if args.summary_out:
        _emit(buf.getvalue(), args.summary_out, out)
    elif args.series_out:
        out.write(buf.getvalue())


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cntpuf", description="CNT-FET crossbar PUF simulator and probing-attack toolkit.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def scenario_flags(p):
        p.add_argument("--config", help=f"scenario YAML (default: ${CONFIG_ENV})")
        p.add_argument("--seed", type=int, help="override the scenario master seed")

    p = sub.add_parser("generate", help="sample a crossbar and save it")
    scenario_flags(p)
    p.add_argument("--out", required=True, help="crossbar JSON output path")
    p.set_defaults(func=cmd_generate)

    for name, func, helptext in (
        ("readout", cmd_readout, "legitimate readout, optional enrollment masking"),
        ("enroll", cmd_enroll, "enrollment with unstable-bit masking"),
    ):
        p = sub.add_parser(name, help=helptext)
        scenario_flags(p)
        p.add_argument("--crossbar", help="crossbar JSON from 'generate' (default: rebuild from scenario)")
        p.add_argument("--enroll-reads", type=int, help="enrollment reads used for masking")
        p.add_argument("--rereads", type=int, default=0, help="extra reads for intra-device distance")
        p.add_argument("--out", required=True, help="response JSON output path")
        p.set_defaults(func=func)

    p = sub.add_parser("attack", help="run a probing attack and score it")
    scenario_flags(p)
    p.add_argument("--kind", required=True, choices=[k.value for k in ATTACK_KINDS])
    p.add_argument("--crossbar", help="crossbar JSON from 'generate'")
    p.add_argument("--repetitions", type=int, help="probe repetitions per cell")
    p.add_argument("--trace-out", required=True, help="trace CSV output path")
    p.add_argument("--report-out", help="attack report JSON output path")
    p.set_defaults(func=cmd_attack)

    p = sub.add_parser("analyze", help="recompute attack reports from stored traces")
    p.add_argument("--trace", required=True, action="append", help="trace CSV (repeatable)")
    p.add_argument("--response", help="legitimate response JSON to score against")
    p.add_argument("--min-ratio", type=float, default=2.0, help="non-separable centroid-ratio cutoff")
    p.add_argument("--out", help="report JSON output path (default: stdout)")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("report", help="plot-ready per-cell series and a summary table")
    p.add_argument("--trace", required=True, action="append", help="trace CSV (repeatable)")
    p.add_argument("--cell", action="append", type=_parse_cell, help="ROW,COL to include (repeatable; default two per class)")
    p.add_argument("--reports", action="append", help="report JSON files for the summary table")
    p.add_argument("--response", help="legitimate response JSON when no --reports are given")
    p.add_argument("--series-out", help="series CSV output path (default: stdout)")
    p.add_argument("--summary-out", help="summary CSV output path")
    p.set_defaults(func=cmd_report)
    return parser


def run(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "repetitions", None) is not None and args.repetitions < 1:
            raise UsageError("--repetitions must be >= 1")
        args.func(args, out)
    except UsageError as e:
        print(f"cntpuf: usage error: {e}", file=err)
        return EXIT_USAGE
    except BlockedError as e:
        print(f"cntpuf: {e}", file=err)
        return EXIT_BLOCKED
    except (ConfigError, FileFormatError, OSError, ValueError) as e:
        print(f"cntpuf: error: {e}", file=err)
        return EXIT_ERROR
    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
