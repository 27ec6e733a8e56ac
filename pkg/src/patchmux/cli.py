"""Batch command-line surface tying the library together.

Four subcommands: ``analytic`` recomputes discard/attempt tables,
``simulate`` runs the seeded shot sampler, ``gap-sweep`` turns record files
into threshold curves (plus a crossing report for two inputs), and
``layout`` validates or packs patch layouts.

Configuration is a single JSON document per run; command-line flags
override individual entries. The only environment variable honored is
PATCHMUX_OUT (output directory override). Reports embed their effective
configuration and its hash, carry no timestamps, and render numbers at six
significant digits, so reruns are byte-identical.

Exit codes: 0 success, 2 configuration error (bad config/paths/values),
3 input format error (unparseable CSV/JSONL/layout text), 4 empty-result
warning (nothing kept, packed, or swept).
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import os
import sys
from pathlib import Path

from . import __version__
from .analytics import AttemptRow, ModelError, reproduce_table
from .analytics import CommonMode, ExplicitJoint, FailureModel
from .gap_analysis import (
    RecordFormatError,
    RecordSet,
    SweepCurve,
    extrapolate_tail,
    find_crossing,
    sweep,
    write_curve_csv,
)
from .geometry import Stage, pack_sites, validate_layout
from .layout_io import (
    LayoutParseError,
    ascii_map,
    canonical_document,
    layout_report,
    load_layout_file,
)
from .montecarlo import (
    EscapeModel,
    GapDistribution,
    SimConfig,
    StageSplit,
    run_simulation,
    write_records_jsonl,
)
from .pipeline import SelectionRule
from .presets import ANALYTIC_PRESETS, simulation_presets

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_FORMAT = 3
EXIT_EMPTY = 4


class ConfigError(Exception):
    pass


# ---------------------------------------------------------------------------
# rendering


def fmt6(value: float) -> str:
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
    return format(value, ".6g")


def _jsonify(obj):
    """Round floats to six significant digits; map inf/nan to strings."""
    if isinstance(obj, float):
        if math.isnan(obj):
            return "nan"
        if math.isinf(obj):
            return "inf" if obj > 0 else "-inf"
        return float(format(obj, ".6g"))
    if isinstance(obj, dict):
        return {k: _jsonify(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonify(v) for v in obj]
    return obj


def _canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def _config_hash(effective_config: dict) -> str:
    return hashlib.sha256(_canonical_json(effective_config).encode("utf-8")).hexdigest()


def _report(command: str, effective_config: dict, results: dict, seed=None) -> dict:
    cfg = _jsonify(effective_config)
    return {
        "command": command,
        "provenance": {
            "tool": "patchmux",
            "tool_version": __version__,
            "config_hash": _config_hash(cfg),
            "seed": seed,
        },
        "config": cfg,
        "results": _jsonify(results),
    }


def _write_json(path: Path, doc: dict) -> None:
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# config plumbing


def _load_config_file(path: str | None) -> dict:
    if path is None:
        return {}
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        cfg = json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    return cfg


def _reject_unknown(cfg: dict, allowed: set[str], context: str) -> None:
    unknown = set(cfg) - allowed
    if unknown:
        raise ConfigError(f"unknown {context} keys: {sorted(unknown)}")


def _out_dir(args, cfg: dict) -> Path:
    if args.out is not None:
        out = args.out
    elif os.environ.get("PATCHMUX_OUT"):
        out = os.environ["PATCHMUX_OUT"]
    else:
        out = cfg.get("out", ".")
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _require_file(path_text: str, what: str) -> Path:
    p = Path(path_text)
    if not p.is_file():
        raise ConfigError(f"{what} not found: {path_text}")
    return p


# ---------------------------------------------------------------------------
# analytic


_ANALYTIC_KEYS = {"preset", "input_csv", "out"}
_ROW_COLUMNS = ("d1", "p", "D1", "D4", "A1", "A4", "rho")


class TableFormatError(Exception):
    pass


def _read_analytic_csv(path: Path) -> list[AttemptRow]:
    rows: list[AttemptRow] = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            return rows
        names = [h.strip() for h in header]
        known = {c.lower(): c for c in _ROW_COLUMNS}
        for name in names:
            if name.lower() not in known:
                raise TableFormatError(f"line 1: unknown column {name!r}")
        for line_no, cells in enumerate(reader, start=2):
            if not cells or all(not c.strip() for c in cells):
                continue
            if len(cells) != len(names):
                raise TableFormatError(
                    f"line {line_no}: expected {len(names)} cells, got {len(cells)}"
                )
            values: dict[str, float | None] = {}
            for name, cell in zip(names, cells):
                cell = cell.strip()
                if not cell:
                    values[known[name.lower()]] = None
                    continue
                try:
                    values[known[name.lower()]] = float(cell)
                except ValueError:
                    raise TableFormatError(
                        f"line {line_no}: non-numeric cell {cell!r} in column {name}"
                    ) from None
            d1 = values.get("d1")
            rows.append(
                AttemptRow(
                    d1=int(d1) if d1 is not None else None,
                    p=values.get("p"),
                    discard_single=values.get("D1"),
                    discard_multi=values.get("D4"),
                    attempts_single=values.get("A1"),
                    attempts_multi=values.get("A4"),
                    reduction_pct=values.get("rho"),
                )
            )
    return rows


def _analytic_csv_text(results) -> str:
    lines = [
        "d1,p,D1,D4,A1,A4,rho,A1_calc,A4_calc,rho_calc,D4_estimate,D4_residual,consistent,error"
    ]
    for res in results:
        row = res.row

        def cell(v):
            return "" if v is None else fmt6(v)

        lines.append(
            ",".join(
                [
                    cell(row.d1),
                    cell(row.p),
                    cell(row.discard_single),
                    cell(row.discard_multi),
                    cell(row.attempts_single),
                    cell(row.attempts_multi),
                    cell(row.reduction_pct),
                    cell(res.attempts_single),
                    cell(res.attempts_multi),
                    cell(res.reduction_pct),
                    cell(res.multi_discard_estimate),
                    cell(res.multi_discard_residual),
                    "true" if res.consistent else "false",
                    res.error or "",
                ]
            )
        )
    return "\n".join(lines) + "\n"


def cmd_analytic(args) -> int:
    cfg = _load_config_file(args.config)
    _reject_unknown(cfg, _ANALYTIC_KEYS, "analytic config")
    preset = args.preset or cfg.get("preset")
    input_csv = cfg.get("input_csv")
    if preset is not None and preset not in ANALYTIC_PRESETS:
        raise ConfigError(
            f"unknown analytic preset {preset!r}; have {sorted(ANALYTIC_PRESETS)}"
        )
    if preset is None and input_csv is None:
        raise ConfigError("analytic needs a preset or an input_csv")
    if input_csv is not None:
        rows = _read_analytic_csv(_require_file(input_csv, "input CSV"))
        source = input_csv
    else:
        rows = list(ANALYTIC_PRESETS[preset])
        source = f"preset:{preset}"

    results = reproduce_table(rows)
    out = _out_dir(args, cfg)
    effective = {"preset": preset, "input_csv": input_csv}
    report = _report(
        "analytic",
        effective,
        {
            "source": source,
            "rows": [
                {
                    "d1": r.row.d1,
                    "p": r.row.p,
                    "attempts_single": r.attempts_single,
                    "attempts_multi": r.attempts_multi,
                    "reduction_pct": r.reduction_pct,
                    "multi_discard_estimate": r.multi_discard_estimate,
                    "multi_discard_residual": r.multi_discard_residual,
                    "consistent": r.consistent,
                    "error": r.error,
                }
                for r in results
            ],
            "all_consistent": all(r.consistent for r in results),
        },
    )
    csv_text = _analytic_csv_text(results)
    _write_json(out / "analytic_report.json", report)
    (out / "analytic_table.csv").write_text(csv_text, encoding="utf-8")

    for r in results:
        if r.error:
            print(f"d1={r.row.d1} p={r.row.p}: ERROR {r.error}")
        else:
            flag = "ok" if r.consistent else "MISMATCH"
            print(
                f"d1={r.row.d1} p={r.row.p}: A_single={fmt6(r.attempts_single)} "
                f"A_multi={fmt6(r.attempts_multi)} reduction={fmt6(r.reduction_pct)}% [{flag}]"
            )
    if args.format == "csv":
        sys.stdout.write(csv_text)
    print(f"wrote {out / 'analytic_report.json'} and {out / 'analytic_table.csv'}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# simulate


_SIMULATE_KEYS = {
    "preset",
    "k",
    "n_shots",
    "seed",
    "failure",
    "escape",
    "stage_split",
    "selection_priority",
    "labels",
    "records",
    "out",
}
_FAILURE_KEYS = {"kind", "per_site_fail", "calibrate_discard", "c", "table"}
_ESCAPE_KEYS = {"kind", "q", "keep_prob", "gap_correct", "gap_error", "pool_path"}
_GAP_KEYS = {"kind", "rate", "value"}
_LABEL_KEYS = {"d1", "p", "d2", "r1", "r2"}


def _parse_gap(d: dict, context: str) -> GapDistribution:
    _reject_unknown(d, _GAP_KEYS, context)
    try:
        return GapDistribution(
            kind=d.get("kind", "discrete_exponential"),
            rate=float(d.get("rate", 1.0)),
            value=float(d.get("value", 0.0)),
        )
    except (ModelError, ValueError, TypeError) as exc:
        raise ConfigError(f"{context}: {exc}") from None


def _parse_escape(d: dict) -> EscapeModel:
    _reject_unknown(d, _ESCAPE_KEYS, "escape")
    kind = d.get("kind", "always_keep")
    kwargs: dict = {"kind": kind}
    if "q" in d:
        kwargs["q"] = float(d["q"])
    if "keep_prob" in d:
        kwargs["keep_prob"] = float(d["keep_prob"])
    if "gap_correct" in d:
        kwargs["gap_correct"] = _parse_gap(d["gap_correct"], "escape.gap_correct")
    if "gap_error" in d:
        kwargs["gap_error"] = _parse_gap(d["gap_error"], "escape.gap_error")
    if kind == "empirical":
        if "pool_path" not in d:
            raise ConfigError("empirical escape model needs pool_path")
        pool_file = _require_file(d["pool_path"], "escape pool")
        pool = _load_record_set(pool_file)
        kwargs["pool_gaps"] = tuple(float(g) for g in pool.gaps)
        kwargs["pool_correct"] = tuple(bool(c) for c in pool.correct)
    try:
        return EscapeModel(**kwargs)
    except (ModelError, ValueError, TypeError) as exc:
        raise ConfigError(f"escape: {exc}") from None


def _parse_failure(d: dict, k: int | None) -> FailureModel:
    _reject_unknown(d, _FAILURE_KEYS, "failure")
    kind = d.get("kind", "independent")
    if "per_site_fail" in d:
        rates = tuple(float(x) for x in d["per_site_fail"])
        if k is not None and len(rates) != k:
            raise ConfigError(f"per_site_fail has {len(rates)} sites but k={k}")
    elif "calibrate_discard" in d:
        if k is None:
            raise ConfigError("calibrate_discard needs an explicit k")
        rates = (float(d["calibrate_discard"]),) * k
    else:
        raise ConfigError("failure needs per_site_fail or calibrate_discard")
    try:
        if kind == "independent":
            return FailureModel(per_site_fail=rates)
        if kind == "common_mode":
            if "c" not in d:
                raise ConfigError("common_mode failure needs c")
            return FailureModel(per_site_fail=rates, correlation=CommonMode(float(d["c"])))
        if kind == "explicit_joint":
            if "table" not in d:
                raise ConfigError("explicit_joint failure needs table")
            table = tuple(float(x) for x in d["table"])
            return FailureModel(per_site_fail=rates, correlation=ExplicitJoint(table))
    except ModelError as exc:
        raise ConfigError(f"failure: {exc}") from None
    raise ConfigError(f"unknown failure kind {kind!r}")


def cmd_simulate(args) -> int:
    cfg = _load_config_file(args.config)
    _reject_unknown(cfg, _SIMULATE_KEYS, "simulate config")

    preset_name = args.preset or cfg.get("preset")
    if preset_name is not None:
        presets = simulation_presets()
        if preset_name not in presets:
            raise ConfigError(
                f"unknown simulate preset {preset_name!r}; have {sorted(presets)}"
            )
        base = presets[preset_name]
        merged = dict(base)
        for key, value in cfg.items():
            if key == "preset":
                continue
            merged[key] = value
        cfg = merged

    k = cfg.get("k")
    if "failure" not in cfg:
        raise ConfigError("simulate needs a failure model (or a preset)")
    failure = _parse_failure(cfg["failure"], int(k) if k is not None else None)
    if k is not None and failure.k != int(k):
        raise ConfigError(f"k={k} does not match failure model with {failure.k} sites")

    escape = _parse_escape(cfg.get("escape", {}))

    labels = cfg.get("labels", {})
    _reject_unknown(labels, _LABEL_KEYS, "labels")

    seed = args.seed if args.seed is not None else int(cfg.get("seed", 0))
    n_shots = int(cfg.get("n_shots", 100_000))

    rule = SelectionRule.lowest_index()
    if "selection_priority" in cfg:
        try:
            rule = SelectionRule.fixed_priority(cfg["selection_priority"])
        except ValueError as exc:
            raise ConfigError(f"selection_priority: {exc}") from None

    split = None
    if "stage_split" in cfg:
        sdict = cfg["stage_split"]
        _reject_unknown(sdict, {"injection_fail", "cultivation_fail"}, "stage_split")
        try:
            split = StageSplit(
                injection_fail=tuple(float(x) for x in sdict["injection_fail"]),
                cultivation_fail=tuple(float(x) for x in sdict["cultivation_fail"]),
            )
        except KeyError as exc:
            raise ConfigError(f"stage_split missing {exc}") from None

    want_records = bool(cfg.get("records", False))
    try:
        sim_config = SimConfig(
            failure_model=failure,
            n_shots=n_shots,
            seed=seed,
            escape_model=escape,
            selection_rule=rule,
            stage_split=split,
            collect_records=want_records,
            d1_label=labels.get("d1"),
            p_label=labels.get("p"),
            d2_label=int(labels.get("d2", 15)),
            r1_label=labels.get("r1"),
            r2_label=int(labels.get("r2", 5)),
        )
    except (ModelError, ValueError) as exc:
        raise ConfigError(str(exc)) from None

    out = _out_dir(args, cfg)  # fail on an unwritable target before simulating
    summary = run_simulation(sim_config, workers=args.workers)
    effective = {
        "preset": preset_name,
        "k": failure.k,
        "n_shots": n_shots,
        "seed": seed,
        "failure": cfg.get("failure"),
        "escape": cfg.get("escape", {}),
        "stage_split": cfg.get("stage_split"),
        "selection_priority": cfg.get("selection_priority"),
        "labels": labels,
        "records": want_records,
    }
    results = {
        "shots": summary.shots,
        "early_discards": summary.early_discards,
        "kept": summary.kept,
        "empirical_discard": summary.empirical_discard,
        "empirical_attempts": summary.empirical_attempts,
        "site_survival_histogram": list(summary.site_survival_histogram),
        "labels": summary.labels,
        "warnings": list(summary.warnings),
    }
    records_path = None
    if want_records:
        records_path = out / "records.jsonl"
        results["records_written"] = write_records_jsonl(summary, records_path)
    report = _report("simulate", effective, results, seed=seed)
    _write_json(out / "sim_summary.json", report)

    print(
        f"shots={summary.shots} early_discards={summary.early_discards} "
        f"kept={summary.kept} empirical_discard={fmt6(summary.empirical_discard)} "
        f"empirical_attempts={fmt6(summary.empirical_attempts)}"
    )
    for warning in summary.warnings:
        print(f"warning: {warning}")
    print(f"wrote {out / 'sim_summary.json'}" + (f" and {records_path}" if records_path else ""))
    return EXIT_EMPTY if summary.kept == 0 else EXIT_OK


# ---------------------------------------------------------------------------
# gap-sweep


_SWEEP_KEYS = {"records", "n_attempts", "thresholds", "tail_window", "out"}


def _load_record_set(path: Path, n_attempts: int | None = None) -> RecordSet:
    if path.suffix.lower() == ".csv":
        return RecordSet.from_csv(path, n_attempts)
    return RecordSet.from_jsonl(path, n_attempts)


def _threshold_grid(cfg, record_sets) -> tuple[float, ...]:
    spec = cfg.get("thresholds")
    if spec is None:
        values: set[float] = {0.0}
        for rs in record_sets:
            values.update(float(g) for g in rs.gaps)
        return tuple(sorted(values))
    if isinstance(spec, list):
        grid = tuple(float(g) for g in spec)
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ConfigError("thresholds list must be strictly increasing")
        return grid
    if isinstance(spec, dict):
        _reject_unknown(spec, {"start", "stop", "count"}, "thresholds")
        try:
            start, stop, count = (
                float(spec["start"]),
                float(spec["stop"]),
                int(spec["count"]),
            )
        except KeyError as exc:
            raise ConfigError(f"thresholds missing {exc}") from None
        if count < 2 or stop <= start:
            raise ConfigError("thresholds need stop > start and count >= 2")
        step = (stop - start) / (count - 1)
        return tuple(start + i * step for i in range(count))
    raise ConfigError("thresholds must be a list or {start, stop, count}")


def cmd_gap_sweep(args) -> int:
    cfg = _load_config_file(args.config)
    _reject_unknown(cfg, _SWEEP_KEYS, "gap-sweep config")
    paths = list(args.records or []) or list(cfg.get("records", []))
    if not paths:
        raise ConfigError("gap-sweep needs at least one record file (--records)")
    files = [_require_file(p, "record file") for p in paths]

    n_attempts_cfg = cfg.get("n_attempts")
    if n_attempts_cfg is None:
        per_input = [None] * len(files)
    elif isinstance(n_attempts_cfg, int):
        per_input = [n_attempts_cfg] * len(files)
    elif isinstance(n_attempts_cfg, list) and len(n_attempts_cfg) == len(files):
        per_input = [int(x) if x is not None else None for x in n_attempts_cfg]
    else:
        raise ConfigError("n_attempts must be an int or one entry per record file")

    record_sets = [
        _load_record_set(path, n_att) for path, n_att in zip(files, per_input)
    ]
    grid = _threshold_grid(cfg, record_sets)
    out = _out_dir(args, cfg)

    tail_window = cfg.get("tail_window")
    if tail_window is not None:
        if not (isinstance(tail_window, list) and len(tail_window) == 2):
            raise ConfigError("tail_window must be [low, high]")
        tail_window = (float(tail_window[0]), float(tail_window[1]))

    curve_names = [f"{p.stem}_curve.csv" for p in files]
    if len(set(curve_names)) != len(curve_names):
        curve_names = [f"{i}_{name}" for i, name in enumerate(curve_names, start=1)]

    curves: list[SweepCurve] = []
    input_reports = []
    empty_inputs = 0
    for path, rs, curve_name in zip(files, record_sets, curve_names):
        curve = sweep(rs, grid)
        tail = extrapolate_tail(curve, tail_window) if tail_window else None
        curve_path = out / curve_name
        write_curve_csv(curve, curve_path, tail)
        curves.append(curve)
        zero = curve.points[0]
        entry = {
            "input": str(path),
            "records": len(rs),
            "n_attempts": rs.n_attempts,
            "curve_csv": curve_path.name,
            "attempts_at_zero": zero.attempts,
            "logical_error_at_zero": zero.logical_error,
        }
        if tail_window:
            if tail is None:
                entry["tail"] = "insufficient error counts in window"
            else:
                entry["tail"] = {
                    "rate": tail.rate,
                    "slope_stderr": tail.slope_stderr,
                    "anchor_threshold": tail.anchor_threshold,
                }
        if len(rs) == 0:
            empty_inputs += 1
            print(f"warning: {path} holds no records; curve is all-undefined")
        input_reports.append(entry)
        print(
            f"{path.name}: {len(rs)} records over {rs.n_attempts} attempts "
            f"-> {curve_path.name}"
        )

    results: dict = {"inputs": input_reports, "thresholds": len(grid)}
    if len(curves) == 2:
        crossing = find_crossing(curves[0], curves[1])
        if crossing is None:
            results["crossing"] = None
            print("no crossing between the two curves")
        else:
            results["crossing"] = {
                "threshold": crossing.threshold,
                "bracket": list(crossing.bracket),
            }
            print(f"curves cross at threshold {fmt6(crossing.threshold)}")

    effective = {
        "records": [str(p) for p in files],
        "n_attempts": n_attempts_cfg,
        "thresholds": cfg.get("thresholds"),
        "tail_window": list(tail_window) if tail_window else None,
    }
    _write_json(out / "gap_report.json", _report("gap-sweep", effective, results))
    print(f"wrote {out / 'gap_report.json'}")
    return EXIT_EMPTY if empty_inputs == len(files) else EXIT_OK


# ---------------------------------------------------------------------------
# layout


_LAYOUT_KEYS = {"preset", "file", "stage", "mode", "k_max", "out"}


def cmd_layout(args) -> int:
    cfg = _load_config_file(args.config)
    _reject_unknown(cfg, _LAYOUT_KEYS, "layout config")
    preset = args.preset or cfg.get("preset")
    file_path = cfg.get("file")
    if preset is None and file_path is None:
        preset = "canonical"
    if preset is not None and preset != "canonical":
        raise ConfigError(f"unknown layout preset {preset!r}; have ['canonical']")
    try:
        stage = Stage.parse(cfg.get("stage", "cultivation"))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    mode = cfg.get("mode", "validate")
    if mode not in ("validate", "pack"):
        raise ConfigError(f"mode must be 'validate' or 'pack', got {mode!r}")

    if file_path is not None:
        doc = load_layout_file(_require_file(file_path, "layout file"))
        source = file_path
    else:
        doc = canonical_document()
        source = "preset:canonical"

    out = _out_dir(args, cfg)
    empty = False
    if mode == "pack":
        if doc.patch is None:
            raise ConfigError("pack mode needs a patch stanza")
        k_max = int(cfg.get("k_max", 4))
        try:
            footprint = doc.footprint_spec(stage)
            layout = pack_sites(doc.patch, footprint, k_max)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if not layout.sites:
            empty = True
            print("warning: no feasible placement for this footprint")
            report_body = layout_report(layout, None)
            report_body["placements"] = 0
        else:
            report_body = layout_report(layout)
            report_body["placements"] = len(layout.sites)
    else:
        try:
            layout = doc.to_layout(stage)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if not layout.sites:
            raise ConfigError("layout defines no sites to validate")
        report_body = layout_report(layout, validate_layout(layout))

    effective = {
        "preset": preset,
        "file": file_path,
        "stage": stage.value,
        "mode": mode,
        "k_max": cfg.get("k_max"),
    }
    report = _report("layout", effective, {"source": source, "layout": report_body})
    map_text = ascii_map(layout) + "\n"
    _write_json(out / "layout_report.json", report)
    (out / "layout_map.txt").write_text(map_text, encoding="utf-8")

    if "containment_ok" in report_body:
        print(
            f"sites={report_body['site_count']} containment_ok={report_body['containment_ok']} "
            f"nonoverlap_ok={report_body['nonoverlap_ok']} idle_count={report_body['idle_count']}"
        )
    else:
        print(f"sites={report_body['site_count']} idle_count={report_body['idle_count']}")
    print(f"wrote {out / 'layout_report.json'} and {out / 'layout_map.txt'}")
    return EXIT_EMPTY if empty else EXIT_OK


# ---------------------------------------------------------------------------
# entry


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="patchmux",
        description="Yield analytics, layout checks and seeded simulation "
        "for multiplexed in-patch cultivation.",
        epilog="Exit codes: 0 success; 2 configuration error; "
        "3 input format error; 4 empty-result warning.",
    )
    parser.add_argument("--version", action="version", version=f"patchmux {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", metavar="PATH", help="JSON configuration document")
        p.add_argument("--out", metavar="DIR", help="output directory (default '.')")
        p.add_argument(
            "--format",
            choices=("json", "csv"),
            default="json",
            help="primary stdout format where applicable",
        )

    p_an = sub.add_parser("analytic", help="recompute discard/attempt tables")
    common(p_an)
    p_an.add_argument("--preset", metavar="NAME", help="built-in table: table2 or table3")
    p_an.set_defaults(func=cmd_analytic)

    p_sim = sub.add_parser("simulate", help="run the seeded shot sampler")
    common(p_sim)
    p_sim.add_argument("--preset", metavar="NAME", help="calibrated setup, e.g. d3-p0.0005")
    p_sim.add_argument("--seed", type=int, metavar="N", help="override the config seed")
    p_sim.add_argument(
        "--workers", type=int, default=1, metavar="N",
        help="worker threads (never changes results)",
    )
    p_sim.set_defaults(func=cmd_simulate)

    p_gap = sub.add_parser("gap-sweep", help="threshold sweeps over record files")
    common(p_gap)
    p_gap.add_argument(
        "--records",
        action="append",
        metavar="PATH",
        help="record file (.jsonl or .csv); repeat for crossing mode",
    )
    p_gap.set_defaults(func=cmd_gap_sweep)

    p_lay = sub.add_parser("layout", help="validate or pack a patch layout")
    common(p_lay)
    p_lay.add_argument("--preset", metavar="NAME", help="built-in layout: canonical")
    p_lay.set_defaults(func=cmd_layout)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (LayoutParseError, RecordFormatError, TableFormatError) as exc:
        print(f"input format error: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def entry() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    raise SystemExit(main())
