"""Command-line pipeline driver.

Subcommands wire the library end to end from one declarative JSON config
(flags override config fields; flags win).  Every artifact embeds a
provenance record (config hash, seed, tool version) and is rerun-stable:
identical configs produce byte-identical CSV/JSON regardless of the
parallelism degree.  Timestamps only ever go to the sidecar ``run.log``.

Exit codes: 0 success, 2 config error, 3 data error, 4 internal invariant
violation.
"""

import argparse
import hashlib
import json
import os
import sys
import time

from . import __version__
from .data import SplitSpec, load_cifar10_batch, make_split, make_synthetic_set, normalize, take
from .errors import ConfigError, DataError, FaultClipError
from .faults import FaultSpec, draw_mask, read_mask_jsonl, write_mask_jsonl
from .metrics import (
    SweepConfig,
    compute_auc,
    evaluate_detailed,
    run_sweep,
    sweep_to_csv,
    sweep_to_json,
)
from .model import load_model, save_model, set_thresholds, strip_thresholds
from .profiling import profile, save_profile
from .svg import sweep_svg
from .tuning import TuneConfig, tune_network

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_INTERNAL = 4


def _load_config(path: str) -> dict:
    if not os.path.exists(path):
        raise ConfigError(f"config file does not exist: {path}")
    with open(path, "r", encoding="utf-8") as fh:
        try:
            cfg = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if "model" not in cfg:
        raise ConfigError(f"config {path} is missing the 'model' path")
    if not os.path.exists(cfg["model"]):
        raise ConfigError(f"model path does not exist: {cfg['model']}")
    ds = cfg.get("dataset", {})
    if ds.get("kind") == "cifar10":
        for f in ds.get("files", []):
            if not os.path.exists(f):
                raise ConfigError(f"dataset file does not exist: {f}")
    return cfg


def _provenance(cfg: dict) -> dict:
    canon = json.dumps(cfg, sort_keys=True, separators=(",", ":")).encode("utf-8")
    return {
        "config_hash": hashlib.sha256(canon).hexdigest(),
        "seed": cfg.get("seed", 0),
        "version": __version__,
    }


def _load_samples(cfg: dict, model) -> list:
    ds = cfg.get("dataset")
    if not ds:
        raise ConfigError("config has no 'dataset' section")
    if ds["kind"] == "synthetic":
        samples = make_synthetic_set(
            seed=int(ds.get("seed", 0)),
            n=int(ds["n"]),
            shape=tuple(ds.get("shape", model.input_shape)),
            classes=int(ds.get("classes", model.class_count)),
            noise=float(ds.get("noise", 0.25)),
        )
    elif ds["kind"] == "cifar10":
        samples = []
        for f in ds["files"]:
            samples.extend(load_cifar10_batch(f))
    else:
        raise ConfigError(f"unknown dataset kind {ds.get('kind')!r}")
    if model.normalization:
        samples = normalize(samples, model.normalization["mean"], model.normalization["std"])
    return samples


def _split_samples(cfg: dict, samples: list) -> tuple:
    sp = cfg.get("split", {})
    if "calibration_indices" in sp or "evaluation_indices" in sp:
        split = SplitSpec(
            tuple(sp.get("calibration_indices", ())),
            tuple(sp.get("evaluation_indices", ())),
        )
    else:
        split = make_split(
            len(samples),
            calibration_fraction=float(sp.get("calibration_fraction", 0.1)),
            seed=int(sp.get("seed", cfg.get("seed", 0))),
        )
    return take(samples, split.calibration), take(samples, split.evaluation)


def _sweep_config(cfg: dict, eval_samples, overrides: dict | None = None) -> SweepConfig:
    sw = dict(cfg.get("sweep", {}))
    sw.update(overrides or {})
    return SweepConfig(
        fault_rates=tuple(sw.get("fault_rates", SweepConfig.fault_rates)),
        trials_per_rate=int(sw.get("trials_per_rate", 50)),
        scope=sw.get("scope", "network"),
        base_seed=int(sw.get("base_seed", cfg.get("seed", 0))),
        eval_set=tuple(eval_samples),
        include_biases=bool(sw.get("include_biases", True)),
        x_scale=sw.get("x_scale", "linear"),
    )


def _outdir(cfg: dict, args) -> str:
    out = args.output_dir or cfg.get("output_dir", ".")
    os.makedirs(out, exist_ok=True)
    return out


def _log(outdir: str, message: str) -> None:
    with open(os.path.join(outdir, "run.log"), "a", encoding="utf-8") as fh:
        fh.write(f"{time.strftime('%Y-%m-%dT%H:%M:%S')} {message}\n")


def _write_json(path: str, doc: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def cmd_profile(args) -> int:
    cfg = _load_config(args.config)
    model = load_model(cfg["model"])
    calibration, _ = _split_samples(cfg, _load_samples(cfg, model))
    if not calibration:
        raise DataError("calibration split is empty")
    prof = profile(model, calibration)
    outdir = _outdir(cfg, args)
    out = os.path.join(outdir, "profile.json")
    save_profile(prof, out, provenance=_provenance(cfg))
    _log(outdir, f"profile -> {out}")
    print(out)
    return EXIT_OK


def _model_variant(model, clip: str, calibration) -> tuple:
    if clip == "none":
        return strip_thresholds(model), None
    if clip == "actmax":
        if not calibration:
            raise DataError("calibration split is empty; cannot profile for actmax clipping")
        prof = profile(strip_thresholds(model), calibration)
        return set_thresholds(model, prof.act_max), prof
    if clip == "tuned":
        if model.thresholds is None:
            raise ConfigError(
                "--clip tuned needs a model container with tuned thresholds (run tune first)"
            )
        return model, None
    raise ConfigError(f"unknown clip mode {clip!r}")


def cmd_sweep(args) -> int:
    cfg = _load_config(args.config)
    model = load_model(cfg["model"])
    samples = _load_samples(cfg, model)
    calibration, evaluation = _split_samples(cfg, samples)
    if not evaluation:
        raise DataError("evaluation split is empty")
    variant, _ = _model_variant(model, args.clip, calibration)
    overrides = {}
    if args.trials is not None:
        overrides["trials_per_rate"] = args.trials
    if args.x_scale is not None:
        overrides["x_scale"] = args.x_scale
    sweep_cfg = _sweep_config(cfg, evaluation, overrides)
    result = run_sweep(variant, sweep_cfg, jobs=args.jobs or int(cfg.get("jobs", 1)))
    auc = compute_auc(result)
    prov = _provenance(cfg)
    prov["clip"] = args.clip

    outdir = _outdir(cfg, args)
    base = os.path.join(outdir, f"sweep-{args.clip}")
    with open(base + ".csv", "w", encoding="utf-8") as fh:
        fh.write(sweep_to_csv(result, provenance=prov))
    _write_json(base + ".json", sweep_to_json(result, auc=auc, provenance=prov))
    if args.svg:
        with open(base + ".svg", "w", encoding="utf-8") as fh:
            fh.write(sweep_svg(result, title=f"clip={args.clip}  auc={auc.auc:.4f}"))
    _log(outdir, f"sweep clip={args.clip} auc={auc.auc:.6f}")
    print(f"{base}.csv auc={auc.auc:.6f}")
    return EXIT_OK


def cmd_tune(args) -> int:
    cfg = _load_config(args.config)
    model = load_model(cfg["model"])
    samples = _load_samples(cfg, model)
    calibration, _ = _split_samples(cfg, samples)
    if not calibration:
        raise DataError("calibration split is empty")
    outdir = _outdir(cfg, args)
    if not model.activation_layer_indices:
        print("nothing to tune: model has no activation layers", file=sys.stderr)
        return EXIT_OK

    prof = profile(strip_thresholds(model), calibration)
    tn = dict(cfg.get("tune", {}))
    tune_cfg = TuneConfig(
        sweep=SweepConfig(
            fault_rates=tuple(tn.get("fault_rates", cfg.get("sweep", {}).get("fault_rates", SweepConfig.fault_rates))),
            trials_per_rate=int(tn.get("trials_per_rate", 10)),
            base_seed=int(tn.get("base_seed", cfg.get("seed", 0))),
            eval_set=tuple(calibration),
            include_biases=bool(tn.get("include_biases", True)),
            x_scale=tn.get("x_scale", "linear"),
        ),
        max_iters=int(tn.get("max_iters", 10)),
        min_iters=int(tn.get("min_iters", 3)),
        delta=float(tn.get("delta", 0.01)),
        layer_order=tuple(tn["layer_order"]) if tn.get("layer_order") else None,
        fault_scope=tn.get("fault_scope", "layer"),
    )
    tuned, traces = tune_network(model, prof, tune_cfg, jobs=args.jobs or int(cfg.get("jobs", 1)))

    model_out = os.path.join(outdir, "tuned.ftc")
    save_model(tuned, model_out)
    prov = _provenance(cfg)
    _write_json(
        os.path.join(outdir, "traces.json"),
        {
            "provenance": prov,
            "thresholds": list(tuned.thresholds),
            "act_max": list(prof.act_max),
            "traces": {str(k): tr.to_json() for k, tr in traces.items()},
        },
    )
    _log(outdir, f"tune -> {model_out} thresholds={list(tuned.thresholds)}")
    print(model_out)
    return EXIT_OK


def cmd_inject(args) -> int:
    cfg = _load_config(args.config)
    model = load_model(cfg["model"])
    samples = _load_samples(cfg, model)
    _, evaluation = _split_samples(cfg, samples)
    if not evaluation:
        raise DataError("evaluation split is empty")
    scope = "network" if args.layer is None else args.layer
    if args.mask_file:
        mask = read_mask_jsonl(args.mask_file)
    else:
        spec = FaultSpec(
            rate=args.rate,
            scope=scope,
            seed=int(cfg.get("seed", 0)),
            trial_id=args.trial,
            include_biases=bool(cfg.get("sweep", {}).get("include_biases", True)),
        )
        mask = draw_mask(model, spec)
    stats = evaluate_detailed(model, evaluation, mask)

    prov = _provenance(cfg)
    report = {
        "accuracy": round(stats.accuracy, 6),
        "correct": stats.correct,
        "total": stats.total,
        "degenerate_logits": stats.degenerate,
        "flips": len(mask),
        "rate": args.rate,
        "scope": scope,
        "trial": args.trial,
        "provenance": prov,
    }
    outdir = _outdir(cfg, args)
    if args.emit_mask:
        write_mask_jsonl(mask, os.path.join(outdir, "mask.jsonl"), provenance=prov)
    _write_json(os.path.join(outdir, "inject.json"), report)
    _log(outdir, f"inject rate={args.rate} scope={scope} accuracy={stats.accuracy:.6f}")
    print(json.dumps(report, sort_keys=True))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="faultclip",
        description="Bit-flip fault simulation and clipped-activation hardening for DNNs",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="JSON run config")
        p.add_argument("--output-dir", default=None, help="override config output_dir")
        p.add_argument("--jobs", type=int, default=None, help="parallel evaluation threads")

    p = sub.add_parser("profile", help="profile calibration activations (methodology step 1)")
    common(p)
    p.set_defaults(func=cmd_profile)

    p = sub.add_parser("sweep", help="accuracy vs fault-rate sweep plus AUC")
    common(p)
    p.add_argument("--clip", choices=["none", "actmax", "tuned"], default="none")
    p.add_argument("--trials", type=int, default=None, help="override trials per rate")
    p.add_argument(
        "--x-scale",
        choices=["linear", "index"],
        default=None,
        help="AUC x-axis mapping: rate/r_max or equispaced grid points",
    )
    p.add_argument("--svg", action="store_true", help="also emit an SVG chart")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("tune", help="profile, clip, and fine-tune thresholds (steps 1-3)")
    common(p)
    p.set_defaults(func=cmd_tune)

    p = sub.add_parser("inject", help="single fault campaign with optional mask emission")
    common(p)
    p.add_argument("--rate", type=float, default=0.0, help="per-bit flip probability")
    group = p.add_mutually_exclusive_group()
    group.add_argument("--layer", type=int, default=None, help="restrict faults to one layer")
    group.add_argument("--network", action="store_true", help="faults across all layers (default)")
    p.add_argument("--trial", type=int, default=0, help="trial id (mask stream selector)")
    p.add_argument("--emit-mask", action="store_true", help="write mask.jsonl for replay")
    p.add_argument("--mask-file", default=None, help="replay a previously emitted mask")
    p.set_defaults(func=cmd_inject)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except FaultClipError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
