"""Command-line front end.

Subcommands: discover, poll, train-pp, eval-boundaries, synth, features,
classify, importance.  Every randomized subcommand echoes its effective
seed into its outputs, files are written atomically (temp + rename), and
a rerun with the same configuration produces byte-identical files.

Exit codes: 0 success, 2 input/parse error, 3 invalid configuration,
4 inconsistent inputs.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import secrets
import sys
import tempfile
from fractions import Fraction
from pathlib import Path

from motifkit import analysis, core, discovery, evaluation, polling, synthesis

EXIT_PARSE = 2
EXIT_CONFIG = 3
EXIT_INCONSISTENT = 4


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _atomic_write(path: Path, data: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _json_text(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _read_text(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise CliError(EXIT_PARSE, f"cannot read {path}: {exc}") from exc


def _read_piece(path: str) -> core.PointSet:
    p = Path(path)
    title = p.stem
    if p.suffix.lower() in (".mid", ".midi"):
        try:
            data = p.read_bytes()
        except OSError as exc:
            raise CliError(EXIT_PARSE, f"cannot read {path}: {exc}") from exc
        try:
            return core.parse_midi(data, title=title)
        except (core.ParseError, core.MonophonyViolation) as exc:
            raise CliError(EXIT_PARSE, f"{path}: {exc}") from exc
    try:
        return core.parse_points_csv(_read_text(path), title=title)
    except core.ParseError as exc:
        raise CliError(EXIT_PARSE, f"{path}: {exc}") from exc


def _load_pattern_file(path: str) -> tuple[str, list[core.PatternRecord]]:
    try:
        return core.load_pattern_file(_read_text(path))
    except core.ParseError as exc:
        raise CliError(EXIT_PARSE, f"{path}: {exc}") from exc


def _out_dir(args) -> Path:
    return Path(args.out_dir or ".")


def _say(args, message: str):
    if not args.quiet:
        print(message)


def _apply_config_file(args: argparse.Namespace):
    """Fill unset flags from the JSON config file; unknown keys are rejected."""
    if not getattr(args, "config", None):
        return
    try:
        doc = json.loads(_read_text(args.config))
    except json.JSONDecodeError as exc:
        raise CliError(EXIT_PARSE, f"{args.config}: invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise CliError(EXIT_CONFIG, f"{args.config}: config must be a JSON object")
    known = {k for k in vars(args) if k not in ("func", "config")}
    for key, value in doc.items():
        attr = key.replace("-", "_")
        if attr not in known:
            raise CliError(EXIT_CONFIG, f"{args.config}: unknown config key {key!r}")
        current = getattr(args, attr)
        if current is None or (current is False and isinstance(value, bool)):
            setattr(args, attr, value)


def _fraction_arg(text) -> Fraction:
    try:
        return core.to_time(text)
    except core.ParseError as exc:
        raise CliError(EXIT_CONFIG, str(exc)) from exc


# ---------------------------------------------------------------------------
# discover


def cmd_discover(args) -> int:
    piece = _read_piece(args.input)
    try:
        records = discovery.run_algorithm(args.alg, piece)
    except ValueError as exc:
        raise CliError(EXIT_CONFIG, str(exc)) from exc
    text = core.dump_pattern_json(piece.title, args.alg, records)
    _atomic_write(Path(args.out), text)
    occurrences = sum(len(r.occurrences) for r in records)
    print(f"patterns={len(records)} occurrences={occurrences}")
    return 0


# ---------------------------------------------------------------------------
# poll


def _pp_params_from_args(args) -> polling.PpParams:
    base = {}
    if args.params_file:
        doc = json.loads(_read_text(args.params_file))
        base = doc.get("params", doc)
    merged = {
        "window": args.window if args.window is not None else base.get("window", 3),
        "order": args.order if args.order is not None else base.get("order", 1),
        "lambda": args.lam if args.lam is not None else base.get("lambda", 0),
        "use_first": base.get("use_first", True),
        "use_second": base.get("use_second", True),
    }
    if args.derivatives:
        merged["use_first"] = args.derivatives in ("first", "both")
        merged["use_second"] = args.derivatives in ("second", "both")
    try:
        return polling.PpParams.from_json_dict(merged)
    except ValueError as exc:
        raise CliError(EXIT_CONFIG, str(exc)) from exc


def _parse_weights(texts) -> dict[str, Fraction]:
    weights = {}
    for text in texts or []:
        for item in text.split(","):
            if not item:
                continue
            name, sep, value = item.partition("=")
            if not sep:
                raise CliError(EXIT_CONFIG, f"weight must be algorithm=value, got {item!r}")
            weights[name.strip()] = _fraction_arg(value)
    return weights


def _curve_csv(header: str, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["t", header])
    for t, v in rows:
        writer.writerow([core.format_time(t), core.format_time(v)])
    return buf.getvalue()


def _presence_csv(
    curve: polling.PollingCurve, file_records: list[tuple[str, list[core.PatternRecord]]]
) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["occurrence"] + [str(i) for i in range(len(curve))])
    for _, records in file_records:
        for rec in records:
            for i, occ in enumerate(rec.occurrences):
                s, e = occ.span
                row = [
                    1 if s <= curve.time_at(k) < e else 0 for k in range(len(curve))
                ]
                writer.writerow([f"{rec.algorithm_id}/{rec.pattern_id}/{i}"] + row)
    return buf.getvalue()


def cmd_poll(args) -> int:
    inputs = [_load_pattern_file(p) for p in args.inputs]
    pieces = {piece for piece, _ in inputs}
    if len(pieces) > 1:
        raise CliError(
            EXIT_INCONSISTENT,
            f"conflicting piece ids across inputs: {sorted(pieces)}",
        )
    piece_id = next(iter(pieces))
    truth_records = None
    if args.truth:
        truth_piece, truth_records = _load_pattern_file(args.truth)
        if truth_piece != piece_id:
            raise CliError(
                EXIT_INCONSISTENT,
                f"truth piece id {truth_piece!r} does not match {piece_id!r}",
            )
    records = [rec for _, recs in inputs for rec in recs]
    weights = _parse_weights(args.weight)
    resolution = _fraction_arg(args.resolution if args.resolution is not None else 1)
    span = None
    if args.span:
        parts = args.span.split(",")
        if len(parts) != 2:
            raise CliError(EXIT_CONFIG, "span must be start,end")
        span = (_fraction_arg(parts[0]), _fraction_arg(parts[1]))
    all_records = records + (truth_records or [])
    if span is None:
        end = max(
            (occ.span[1] for rec in all_records for occ in rec.occurrences),
            default=resolution,
        )
        span = (Fraction(0), end)
    params = _pp_params_from_args(args)
    try:
        curve = polling.polling_curve(
            records, weights, resolution, span, normalize=args.normalize
        )
        boundaries = polling.extract_boundaries(curve, params)
        smoothed = polling.savgol_smooth(curve, params.window, params.order)
        p1, p2 = polling.derivatives(smoothed)
        presence_curve = polling.polling_curve(all_records, weights, resolution, span)
    except ValueError as exc:
        raise CliError(EXIT_CONFIG, str(exc)) from exc

    out = _out_dir(args)
    times = [curve.time_at(k) for k in range(len(curve))]
    _atomic_write(out / f"{piece_id}.curve.csv", _curve_csv("value", zip(times, curve.values)))
    _atomic_write(
        out / f"{piece_id}.smoothed.csv", _curve_csv("value", zip(times, smoothed.values))
    )
    _atomic_write(out / f"{piece_id}.deriv1.csv", _curve_csv("dvalue", zip(times, p1)))
    _atomic_write(out / f"{piece_id}.deriv2.csv", _curve_csv("d2value", zip(times, p2)))
    _atomic_write(
        out / f"{piece_id}.presence.csv",
        _presence_csv(presence_curve, inputs + ([("truth", truth_records)] if truth_records else [])),
    )
    boundary_doc = {
        "piece": piece_id,
        "resolution": core.format_time(resolution),
        "params": params.to_json_dict(),
        "boundaries": list(boundaries),
        "times": [core.format_time(curve.time_at(i)) for i in boundaries],
    }
    _atomic_write(out / f"{piece_id}.boundaries.json", _json_text(boundary_doc))

    if truth_records is not None:
        truth = evaluation.truth_boundaries(truth_records, curve.origin, resolution)
        prf = evaluation.boundary_prf(boundaries, truth, args.tolerance)
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["piece", "algorithm", "precision", "recall", "f1"])
        writer.writerow(
            [piece_id, "pp", float(prf.precision), float(prf.recall), float(prf.f1)]
        )
        _atomic_write(out / f"{piece_id}.scores.csv", buf.getvalue())
        _say(args, f"precision={float(prf.precision):.4f} recall={float(prf.recall):.4f} f1={float(prf.f1):.4f}")
    _say(args, f"boundaries={len(boundaries)} grid_points={len(curve)}")
    return 0


# ---------------------------------------------------------------------------
# train-pp


def cmd_train_pp(args) -> int:
    doc = json.loads(_read_text(args.manifest))
    if not isinstance(doc, dict) or "pieces" not in doc:
        raise CliError(EXIT_CONFIG, "manifest must be an object with a 'pieces' array")
    pieces = []
    for entry in doc["pieces"]:
        records = []
        for path in entry["patterns"]:
            records.extend(_load_pattern_file(path)[1])
        _, truth_records = _load_pattern_file(entry["truth"])
        truth = evaluation.truth_boundaries(truth_records)
        pieces.append((records, truth))
    grid_spec = doc.get("grid", {})
    windows = grid_spec.get("windows", [3, 5])
    orders = grid_spec.get("orders", [1, 2])
    lambdas = grid_spec.get("lambdas", [0])
    flags = grid_spec.get("derivatives", ["both"])
    grid = []
    for w in windows:
        for o in orders:
            if o >= w:
                continue
            for lam in lambdas:
                for flag in flags:
                    grid.append(
                        polling.PpParams(
                            window=int(w),
                            order=int(o),
                            lam=core.to_time(lam),
                            use_first=flag in ("first", "both"),
                            use_second=flag in ("second", "both"),
                        )
                    )
    seed = args.seed if args.seed is not None else 0
    try:
        best = polling.train_pp(
            pieces,
            grid,
            objective=args.objective,
            k_folds=args.folds,
            tolerance=args.tolerance,
            seed=seed,
        )
    except ValueError as exc:
        raise CliError(EXIT_CONFIG, str(exc)) from exc
    out_doc = {
        "objective": args.objective,
        "folds": args.folds,
        "seed": seed,
        "params": best.to_json_dict(),
    }
    _atomic_write(Path(args.out), _json_text(out_doc))
    _say(args, f"best window={best.window} order={best.order} lambda={best.lam}")
    return 0


# ---------------------------------------------------------------------------
# eval-boundaries


def cmd_eval_boundaries(args) -> int:
    pred_doc = json.loads(_read_text(args.pred))
    if not isinstance(pred_doc, dict) or "boundaries" not in pred_doc:
        raise CliError(EXIT_PARSE, f"{args.pred}: expected a boundaries JSON document")
    predicted = [int(b) for b in pred_doc["boundaries"]]
    piece_id, truth_records = _load_pattern_file(args.truth)
    resolution = _fraction_arg(pred_doc.get("resolution", 1))
    truth = evaluation.truth_boundaries(truth_records, resolution=resolution)
    prf = evaluation.boundary_prf(predicted, truth, args.tolerance)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["piece", "algorithm", "precision", "recall", "f1"])
    writer.writerow(
        [piece_id, pred_doc.get("algorithm", "pp"), float(prf.precision), float(prf.recall), float(prf.f1)]
    )
    if args.out:
        _atomic_write(Path(args.out), buf.getvalue())
    print(
        f"precision={float(prf.precision):.4f} recall={float(prf.recall):.4f} "
        f"f1={float(prf.f1):.4f} matches={prf.matches}"
    )
    return 0


# ---------------------------------------------------------------------------
# synth


def cmd_synth(args) -> int:
    seed = args.seed if args.seed is not None else secrets.randbits(48)
    try:
        config = synthesis.SynthConfig(
            occurrences_per_template=args.occurrences if args.occurrences is not None else 2,
            rest_probability=args.rest_prob if args.rest_prob is not None else 0.2,
            random_fraction_cap=_fraction_arg(args.cap if args.cap is not None else "1/2"),
            seed=seed,
        )
    except ValueError as exc:
        raise CliError(EXIT_CONFIG, str(exc)) from exc
    piece = synthesis.synthesize(config)
    name = args.name or f"synthetic-{seed}"
    out = _out_dir(args)
    _atomic_write(out / f"{name}.csv", core.emit_points_csv(piece.piece))
    _atomic_write(
        out / f"{name}.truth.json",
        core.dump_pattern_json(name, synthesis.GROUND_TRUTH_ID, piece.ground_truth),
    )
    config_doc = synthesis.config_to_json_dict(config)
    config_doc["name"] = name
    config_doc["total_duration"] = core.format_time(piece.total_duration)
    config_doc["random_duration"] = core.format_time(piece.random_duration)
    _atomic_write(out / f"{name}.config.json", _json_text(config_doc))
    _say(
        args,
        f"notes={len(piece.piece)} duration={piece.total_duration} "
        f"random={piece.random_duration} seed={seed}",
    )
    return 0


# ---------------------------------------------------------------------------
# features


def cmd_features(args) -> int:
    rows: list[tuple[list[float], str]] = []
    piece = _read_piece(args.piece) if args.piece else None
    all_records: list[tuple[str, list[core.PatternRecord]]] = []
    for path in args.patterns or []:
        all_records.append(_load_pattern_file(path))
    for _, records in all_records:
        X, labels = analysis.features_of_records(records)
        rows.extend((list(x), label) for x, label in zip(X, labels))
    seed = args.seed if args.seed is not None else 0
    if args.random:
        if piece is None:
            raise CliError(EXIT_CONFIG, "--random requires --piece for excerpt sampling")
        annotations = [rec for _, records in all_records for rec in records]
        if not annotations:
            raise CliError(EXIT_CONFIG, "--random requires at least one pattern file")
        excerpts = analysis.sample_random_excerpts(
            [(piece, annotations)], repeats=args.random, seed=seed
        )
        for occ in excerpts:
            rows.append((list(analysis.extract_features(occ)), "random"))
    if not rows:
        raise CliError(EXIT_CONFIG, "no occurrences to featurize")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(list(analysis.FEATURE_NAMES) + ["group"])
    for values, label in rows:
        writer.writerow([repr(float(v)) for v in values] + [label])
    _atomic_write(Path(args.out), buf.getvalue())
    _say(args, f"rows={len(rows)} seed={seed}")
    return 0


def _read_features_csv(path: str) -> analysis.LabeledDataset:
    text = _read_text(path)
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise CliError(EXIT_PARSE, f"{path}: empty features file") from None
    if "group" not in header:
        raise CliError(EXIT_PARSE, f"{path}: missing 'group' label column")
    label_col = header.index("group")
    feature_cols = [i for i in range(len(header)) if i != label_col]
    X, labels = [], []
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        try:
            X.append([float(row[i]) for i in feature_cols])
        except (ValueError, IndexError) as exc:
            raise CliError(EXIT_PARSE, f"{path}: line {lineno}: {exc}") from exc
        labels.append(row[label_col])
    if not X:
        raise CliError(EXIT_PARSE, f"{path}: no data rows")
    return analysis.LabeledDataset(X, tuple(labels))


# ---------------------------------------------------------------------------
# classify / importance


def cmd_classify(args) -> int:
    dataset = _read_features_csv(args.features)
    seed = args.seed if args.seed is not None else 0
    kinds = [k.strip() for k in (args.classifiers or "rf,nb,lda").split(",") if k.strip()]
    spec = {}
    for kind in kinds:
        params = {}
        if kind == "rf" and args.trees:
            params["trees"] = args.trees
        spec[kind] = params
    try:
        report = analysis.cross_validate(
            dataset,
            spec,
            folds=args.folds,
            repeats=args.repeats,
            balance=not args.no_balance,
            seed=seed,
            pca_components=args.pca,
        )
    except ValueError as exc:
        raise CliError(EXIT_CONFIG, str(exc)) from exc
    _atomic_write(Path(args.out), _json_text(report.to_json_dict()))
    for name in sorted(report.results):
        res = report.results[name]
        _say(args, f"{name}: accuracy={res.accuracy_mean:.4f} (var {res.accuracy_variance:.6f})")
    return 0


def cmd_importance(args) -> int:
    dataset = _read_features_csv(args.features)
    seed = args.seed if args.seed is not None else 0
    if len(set(dataset.labels)) < 2:
        raise CliError(EXIT_CONFIG, "need at least 2 groups for importance analysis")
    report = analysis.feature_importance(
        dataset.X,
        list(dataset.labels),
        feature_names=analysis.FEATURE_NAMES
        if dataset.X.shape[1] == len(analysis.FEATURE_NAMES)
        else None,
        runs=args.runs,
        trees=args.trees or 100,
        seed=seed,
    )
    _atomic_write(Path(args.out), _json_text(report.to_json_dict()))
    confirmed = [f.name for f in report.features if f.status == "confirmed"]
    _say(args, f"confirmed={len(confirmed)} of {len(report.features)} features")
    return 0


# ---------------------------------------------------------------------------
# Parser


def _add_common(sub: argparse.ArgumentParser):
    sub.add_argument("--out-dir", default=None, help="output directory (default .)")
    sub.add_argument("--seed", type=int, default=None, help="random seed")
    sub.add_argument("--quiet", action="store_true", help="suppress status output")
    sub.add_argument("--config", default=None, help="JSON config file mirroring flags")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="motifkit",
        description="Pattern discovery, polling fusion, evaluation, synthesis, classification",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("discover", help="run a discovery algorithm over a piece")
    p.add_argument("--in", dest="input", required=True, help="piece (CSV or MIDI)")
    p.add_argument("--alg", required=True, help="sia|siatec|cosiatec|siatec-compress:<key>|siar:<r>|siarct:<a>,<b>")
    p.add_argument("--out", required=True, help="interchange JSON output path")
    _add_common(p)
    p.set_defaults(func=cmd_discover)

    p = sub.add_parser("poll", help="fuse pattern files into a polling curve")
    p.add_argument("--in", dest="inputs", nargs="+", required=True, help="pattern JSON files")
    p.add_argument("--truth", default=None, help="ground-truth pattern JSON")
    p.add_argument("--weight", action="append", default=None, help="algorithm=weight (repeatable)")
    p.add_argument("--resolution", default=None, help="grid resolution in crotchets")
    p.add_argument("--span", default=None, help="piece span start,end")
    p.add_argument("--window", type=int, default=None)
    p.add_argument("--order", type=int, default=None)
    p.add_argument("--lambda", dest="lam", default=None, help="steepness threshold")
    p.add_argument("--derivatives", choices=["first", "second", "both"], default=None)
    p.add_argument("--params-file", default=None, help="trained params JSON from train-pp")
    p.add_argument("--normalize", action="store_true", help="divide the curve by total weight")
    p.add_argument("--tolerance", type=int, default=1, help="boundary match tolerance (grid steps)")
    _add_common(p)
    p.set_defaults(func=cmd_poll)

    p = sub.add_parser("train-pp", help="grid-search boundary parameters by cross-validation")
    p.add_argument("--manifest", required=True, help="JSON manifest with pieces and grid")
    p.add_argument("--objective", choices=["precision", "recall", "f1"], default="f1")
    p.add_argument("--folds", type=int, default=3)
    p.add_argument("--tolerance", type=int, default=1)
    p.add_argument("--out", required=True, help="output params JSON")
    _add_common(p)
    p.set_defaults(func=cmd_train_pp)

    p = sub.add_parser("eval-boundaries", help="score predicted boundaries against truth")
    p.add_argument("--pred", required=True, help="boundaries JSON (from poll)")
    p.add_argument("--truth", required=True, help="ground-truth pattern JSON")
    p.add_argument("--tolerance", type=int, default=1)
    p.add_argument("--out", default=None, help="scores CSV path")
    _add_common(p)
    p.set_defaults(func=cmd_eval_boundaries)

    p = sub.add_parser("synth", help="generate a synthetic piece with planted patterns")
    p.add_argument("--name", default=None, help="output basename")
    p.add_argument("--occurrences", type=int, default=None, help="occurrences per template")
    p.add_argument("--rest-prob", type=float, default=None)
    p.add_argument("--cap", default=None, help="random-fraction cap in (0,1)")
    _add_common(p)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("features", help="extract feature rows from pattern files")
    p.add_argument("--piece", default=None, help="piece file (needed for --random)")
    p.add_argument("--patterns", nargs="+", default=None, help="pattern JSON files")
    p.add_argument("--random", type=int, default=None, help="random excerpts per occurrence")
    p.add_argument("--out", required=True, help="features CSV path")
    _add_common(p)
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("classify", help="cross-validated classification report")
    p.add_argument("--features", required=True, help="features CSV")
    p.add_argument("--classifiers", default=None, help="comma list of rf,nb,lda")
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--trees", type=int, default=None, help="random forest size")
    p.add_argument("--pca", type=int, default=None, help="PCA components (default: raw features)")
    p.add_argument("--no-balance", action="store_true", help="skip class balancing")
    p.add_argument("--out", required=True, help="report JSON path")
    _add_common(p)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("importance", help="shadow-feature importance report")
    p.add_argument("--features", required=True, help="features CSV")
    p.add_argument("--runs", type=int, default=20)
    p.add_argument("--trees", type=int, default=None)
    p.add_argument("--out", required=True, help="report JSON path")
    _add_common(p)
    p.set_defaults(func=cmd_importance)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _apply_config_file(args)
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
