"""Command-line front end.

Subcommands: estimate (score one photo), synth (generate a graded haze
stack), gridsearch (rank all scoring variants over a sample list), eval
(score samples under one variant, optionally calibrate), join (associate
photos with PM2.5 records).

Exit codes: 0 success, 1 user/input error, 2 internal error. Numeric
settings resolve as: command-line flag > JSON config file > default.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import evaluation, ingest, synth
from .darkchannel import DarkChannelParams
from .depthsource import DepthSource, depth_for
from .estimator import EstimatorVariant, enumerate_variants, estimate
from .guidedfilter import GuidedFilterParams
from .raster import FormatError, load_image

__all__ = ["main", "entrypoint"]

GLOBAL_DEFAULTS = {
    "d_max": 300.0,
    "patch_size": 15,
    "omega": 0.95,
    "gf_window": 60,
    "gf_epsilon": 1e-3,
    "jobs": 1,
}

FAMILY_NAMES = ("trans", "depth", "both", "baselines")


class UserInputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on bad flags; the contract reserves 2 for internal
    # errors, so route usage problems through the exit-1 path instead.
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UserInputError(message)


def _add_global_flags(parser: argparse.ArgumentParser) -> None:
    g = parser.add_argument_group("pipeline settings")
    g.add_argument("--config", help="JSON file with default settings")
    g.add_argument("--d-max", type=float, help="depth cap in scene units (default 300)")
    g.add_argument("--patch-size", type=int, help="dark channel window size (default 15)")
    g.add_argument("--omega", type=float, help="haze retention factor (default 0.95)")
    g.add_argument("--gf-window", type=int, help="guided filter radius (default 60)")
    g.add_argument("--gf-epsilon", type=float, help="guided filter regularizer (default 1e-3)")
    g.add_argument("--jobs", type=int, help="worker processes (default 1)")


def _settings(args: argparse.Namespace) -> dict:
    merged = dict(GLOBAL_DEFAULTS)
    if args.config:
        try:
            with open(args.config) as f:
                loaded = json.load(f)
        except (OSError, json.JSONDecodeError) as exc:
            raise UserInputError(f"cannot read config {args.config}: {exc}") from exc
        unknown = set(loaded) - set(GLOBAL_DEFAULTS)
        if unknown:
            raise UserInputError(f"unknown config keys: {sorted(unknown)}")
        merged.update(loaded)
    for key in GLOBAL_DEFAULTS:
        flag = getattr(args, key, None)
        if flag is not None:
            merged[key] = flag
    merged["dc"] = DarkChannelParams(patch_size=int(merged["patch_size"]), omega=merged["omega"])
    merged["gf"] = GuidedFilterParams(window=int(merged["gf_window"]), epsilon=merged["gf_epsilon"])
    if merged["jobs"] < 1:
        raise UserInputError("--jobs must be >= 1")
    return merged


def _depth_source(args: argparse.Namespace) -> DepthSource:
    if args.depth is not None:
        return DepthSource.precomputed_file(args.depth, normalize=args.depth_normalize)
    return DepthSource.uniform(args.depth_uniform, normalize=args.depth_normalize)


def _run_estimate(args: argparse.Namespace) -> int:
    cfg = _settings(args)
    variant = EstimatorVariant.parse(args.variant)
    image = load_image(args.image)
    source = _depth_source(args)
    sample = ingest.LabeledSample(
        image_path=str(args.image), depth_source=source, truth_kind="k", truth_value=0.0
    )
    depth = depth_for(sample, source, d_max=cfg["d_max"], shape=(image.height, image.width))
    score = estimate(image, depth, variant, dc=cfg["dc"], gf=cfg["gf"])
    line = f"score={score.value!r} variant={score.variant.key()}"
    if args.calibration:
        with open(args.calibration) as f:
            cal = json.load(f)
        thresholds = evaluation.CalibrationThresholds(
            orientation=int(cal["orientation"]),
            low_cut=float(cal["low_cut"]),
            high_cut=float(cal["high_cut"]),
        )
        line += f" level={evaluation.classify(score.value, thresholds)}"
    print(line)
    return 0


def _parse_conditions(text: str) -> tuple[str, ...]:
    kinds = tuple(t.strip() for t in text.split(",") if t.strip())
    for k in kinds:
        if k not in synth.CONDITION_KINDS:
            raise UserInputError(f"unknown condition: {k!r}")
    if not kinds:
        raise UserInputError("need at least one condition")
    return kinds


def _parse_sky(text: str) -> tuple[float, float, float]:
    parts = [float(t) for t in text.split(",")]
    if len(parts) == 1:
        parts = parts * 3
    if len(parts) != 3:
        raise UserInputError("--sky takes one value or three comma-separated values")
    return (parts[0], parts[1], parts[2])


def _run_synth(args: argparse.Namespace) -> int:
    cfg = _settings(args)
    scene = load_image(args.scene)
    if args.depth is not None:
        source = DepthSource.ground_truth_file(args.depth)
    else:
        source = DepthSource.uniform(args.depth_uniform)
    sample = ingest.LabeledSample(
        image_path=str(args.scene), depth_source=source, truth_kind="k", truth_value=0.0
    )
    depth = depth_for(sample, source, d_max=cfg["d_max"], shape=(scene.height, scene.width))
    if args.k_values:
        levels: tuple[float, ...] | None = tuple(float(t) for t in args.k_values.split(","))
    elif args.k_levels is not None:
        levels = synth.default_k_levels(depth, n=args.k_levels)
    else:
        levels = None
    spec = synth.SynthSpec(
        k_levels=levels,
        conditions=_parse_conditions(args.conditions),
        sky_luminance=_parse_sky(args.sky),
        noise_strength=args.noise_strength,
        noise_seed=args.seed,
    )
    scene_id = args.scene_id or Path(args.scene).stem
    entries = synth.generate_stack(scene, depth, spec, args.out_dir, scene_id=scene_id)
    manifest = Path(args.out_dir) / "manifest.csv"
    synth.write_manifest(entries, manifest)
    print(str(manifest))
    return 0


def _run_gridsearch(args: argparse.Namespace) -> int:
    cfg = _settings(args)
    samples = ingest.read_samples_csv(args.samples)
    if not samples:
        raise UserInputError(f"no samples in {args.samples}")
    variants = enumerate_variants()
    print(f"variants={len(variants)}")
    families = None
    baselines: tuple[str, ...] = ()
    if args.families:
        families = tuple(t.strip() for t in args.families.split(",") if t.strip())
        for fam in families:
            if fam not in FAMILY_NAMES:
                raise UserInputError(f"unknown family: {fam!r}")
        if "baselines" in families:
            baselines = evaluation.BASELINE_KINDS
    results = evaluation.grid_search(
        samples,
        variants,
        baselines=baselines,
        dc=cfg["dc"],
        gf=cfg["gf"],
        d_max=cfg["d_max"],
        jobs=cfg["jobs"],
    )
    if families:
        by_family = {}
        for r in results:  # already sorted best-first
            fam = (
                "baselines"
                if r.variant.startswith("standin-baseline:")
                else EstimatorVariant.parse(r.variant).family
            )
            by_family.setdefault(fam, r)
        results = [by_family[f] for f in families if f in by_family]
        for fam, r in zip(families, results):
            print(f"family={fam} variant={r.variant} spearman_abs={r.spearman_abs!r}")
    else:
        best = results[0]
        print(f"best variant={best.variant} spearman_abs={best.spearman_abs!r}")
    evaluation.write_results_csv(results, args.out)
    print(str(args.out))
    return 0


def _run_eval(args: argparse.Namespace) -> int:
    cfg = _settings(args)
    samples = ingest.read_samples_csv(args.samples)
    if not samples:
        raise UserInputError(f"no samples in {args.samples}")
    variant = EstimatorVariant.parse(args.variant)
    matrix = evaluation.score_samples(
        samples, [variant], dc=cfg["dc"], gf=cfg["gf"], d_max=cfg["d_max"], jobs=cfg["jobs"]
    )
    scores = matrix[:, 0]
    truth = [s.truth_value for s in samples]
    rho, p = evaluation.spearman(scores, truth)
    print(f"spearman_abs={abs(rho)!r} rho={rho!r} p_value={p!r} n={len(samples)}")
    if args.out:
        import csv as _csv

        with open(args.out, "w", newline="") as f:
            writer = _csv.writer(f)
            writer.writerow(["path", "score", "truth_kind", "truth_value"])
            for s, v in zip(samples, scores):
                writer.writerow([s.image_path, repr(float(v)), s.truth_kind, repr(s.truth_value)])
    if args.calibration_out:
        if any(s.truth_kind != "ordinal" for s in samples):
            raise UserInputError("--calibration-out needs ordinal (0/1/2) truth labels")
        thresholds = evaluation.calibrate(scores, truth)
        with open(args.calibration_out, "w") as f:
            json.dump(
                {
                    "orientation": thresholds.orientation,
                    "low_cut": thresholds.low_cut,
                    "high_cut": thresholds.high_cut,
                },
                f,
            )
            f.write("\n")
    return 0


def _run_join(args: argparse.Namespace) -> int:
    records, dropped = ingest.load_pm25(args.pm25)
    result = ingest.join_photos(args.manifest, records, tolerance=args.tolerance_minutes)
    ingest.write_samples_csv(result.samples, args.out)
    print(
        f"joined={result.joined} excluded={result.excluded} "
        f"invalid={result.invalid} pm25_dropped={dropped}"
    )
    return 0


def _build_parser() -> _Parser:
    parser = _Parser(prog="hazelevel", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p_est = sub.add_parser("estimate", help="score the haze level of one photo")
    p_est.add_argument("--image", required=True)
    grp = p_est.add_mutually_exclusive_group(required=True)
    grp.add_argument("--depth", help="depth raster (PFM or DEPTH text)")
    grp.add_argument("--depth-uniform", type=float, help="uniform depth value")
    p_est.add_argument("--depth-normalize", action="store_true")
    p_est.add_argument("--variant", required=True, help="e.g. refined|unit|unit|d_over_t|mean|dnorm=0")
    p_est.add_argument("--calibration", help="calibration JSON for Clear/Light/Heavy output")
    _add_global_flags(p_est)
    p_est.set_defaults(run=_run_estimate)

    p_syn = sub.add_parser("synth", help="generate a graded haze stack from a clear scene")
    p_syn.add_argument("--scene", required=True)
    grp = p_syn.add_mutually_exclusive_group(required=True)
    grp.add_argument("--depth", help="depth raster matching the scene")
    grp.add_argument("--depth-uniform", type=float, help="uniform depth value")
    p_syn.add_argument("--out-dir", required=True)
    p_syn.add_argument("--k-levels", type=int, help="number of haze levels (default 9)")
    p_syn.add_argument("--k-values", help="explicit comma-separated haze intensities")
    p_syn.add_argument("--conditions", default=",".join(synth.CONDITION_KINDS))
    p_syn.add_argument("--sky", default="0.9", help="sky luminance: one value or r,g,b")
    p_syn.add_argument("--noise-strength", type=float, default=0.5)
    p_syn.add_argument("--seed", type=int, default=0)
    p_syn.add_argument("--scene-id", help="defaults to the scene filename stem")
    _add_global_flags(p_syn)
    p_syn.set_defaults(run=_run_synth)

    p_grid = sub.add_parser("gridsearch", help="rank every scoring variant over a sample list")
    p_grid.add_argument("--samples", required=True, help="samples CSV")
    p_grid.add_argument("--out", default="results.csv", help="results CSV path")
    p_grid.add_argument(
        "--families",
        help="comma list of trans,depth,both,baselines: emit the best row per family",
    )
    _add_global_flags(p_grid)
    p_grid.set_defaults(run=_run_gridsearch)

    p_eval = sub.add_parser("eval", help="score samples under one variant")
    p_eval.add_argument("--samples", required=True)
    p_eval.add_argument("--variant", required=True)
    p_eval.add_argument("--out", help="per-sample scores CSV")
    p_eval.add_argument("--calibration-out", help="write 3-level calibration JSON")
    _add_global_flags(p_eval)
    p_eval.set_defaults(run=_run_eval)

    p_join = sub.add_parser("join", help="associate photos with hourly PM2.5 records")
    p_join.add_argument("--manifest", required=True, help="photo manifest CSV (path,timestamp)")
    p_join.add_argument("--pm25", required=True, help="PM2.5 CSV (timestamp,pm25)")
    p_join.add_argument("--tolerance-minutes", type=float, default=30.0)
    p_join.add_argument("--out", required=True, help="samples CSV output")
    _add_global_flags(p_join)
    p_join.set_defaults(run=_run_join)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return args.run(args)
    except UserInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (FormatError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # internal invariant violation
        print(f"internal error: {exc}", file=sys.stderr)
        return 2


def entrypoint() -> None:
    sys.exit(main())
