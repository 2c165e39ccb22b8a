"""Command-line front end: generate | train | finetune | eval.

Every run is fully determined by a config file (plus explicit flags for the
transfer stage); run directories collect the config echo, the manifest with
the input content hash, the metrics CSV, the checkpoint, and SVG plots.
Exit code 0 means the run completed without divergence.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import backends
from .network import Checkpoint, forward, load_checkpoint, save_checkpoint
from .presets import build_problem, get_preset, list_presets, make_dataset
from .problems import Problem
from .runio import ConfigError, content_hash, load_config, prepare_run_dir, write_manifest
from .sampling import read_cloud_csv, write_cloud_csv
from .training import TrainingDiverged, TrainResult, TrainSettings, train
from .transfer import finetune, prepare_finetune

__all__ = ["main", "forward_reference", "predictor_from_checkpoint"]


def predictor_from_checkpoint(preset_name: str, checkpoint: Checkpoint):
    """Physical-displacement predictor backed by a trained network."""
    preset = get_preset(preset_name)
    scales = preset.scales()
    transform = preset.transform()
    dim = preset.dim

    def predict(coords: np.ndarray) -> np.ndarray:
        xbar = scales.scale_coords(coords)
        ubar = transform.apply_value(xbar, forward(checkpoint.params, xbar))
        return scales.unscale_displacement(ubar[:, :dim])

    return predict


def forward_reference(
    preset_name: str,
    epochs: int | None = None,
    seed: int = 0,
    resolution: dict | None = None,
) -> TrainResult:
    """High-fidelity forward solve used as the reference for solve-backed
    presets (their stand-in for external simulation data)."""
    preset = get_preset(preset_name)
    problem = build_problem(preset_name, "forward", resolution=resolution)
    settings = TrainSettings(
        epochs=preset.forward_epochs if epochs is None else epochs,
        seed=seed,
        weighting="uncertainty",
    )
    return train(problem, settings)


def _parse_resolution(text: str | None) -> dict | None:
    if not text:
        return None
    out: dict = {}
    for item in text.split(","):
        key, _, value = item.partition("=")
        if not value:
            raise ConfigError(f"bad resolution entry {item!r} (expected key=value)")
        if "x" in value:
            out[key.strip()] = tuple(int(v) for v in value.split("x"))
        else:
            out[key.strip()] = int(value)
    return out


def _parse_noise(text: str | None):
    if text is None:
        return None
    return tuple(float(v) for v in text.split(","))


# ---------------------------------------------------------------------------
# generate
# ---------------------------------------------------------------------------


def _cmd_generate(args) -> int:
    preset = get_preset(args.preset)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    resolution = _parse_resolution(args.resolution)

    reference_fn = None
    if preset.reference == "forward":
        if args.ref_checkpoint:
            ckpt = load_checkpoint(args.ref_checkpoint)
            reference_fn = predictor_from_checkpoint(args.preset, ckpt)
        else:
            print(f"[generate] running forward reference solve for {args.preset} ...")
            result = forward_reference(args.preset, args.ref_epochs, args.ref_seed)
            ref_path = out.with_suffix(".ref.ckpt")
            save_checkpoint(result.checkpoint, ref_path)
            print(f"[generate] reference checkpoint -> {ref_path}")
            reference_fn = predictor_from_checkpoint(args.preset, result.checkpoint)

    monitoring = args.monitoring
    if monitoring is not None and monitoring != "all":
        monitoring = int(monitoring)
    cloud, provenance = make_dataset(
        args.preset,
        noise=_parse_noise(args.noise),
        monitoring=monitoring,
        seed=args.seed,
        resolution=resolution,
        reference_fn=reference_fn,
    )
    write_cloud_csv(cloud, out, provenance)
    counts = cloud.counts()
    print(f"[generate] {out}: {counts}")
    return 0


# ---------------------------------------------------------------------------
# train / finetune shared plumbing
# ---------------------------------------------------------------------------


def _problem_from_config(cfg: dict) -> tuple[Problem, bytes, dict]:
    pcfg = cfg["problem"]
    preset_name = pcfg["preset"]
    mode = pcfg.get("mode", "inverse")
    scaled = pcfg.get("scaled", True)
    resolution = pcfg.get("resolution")
    dataset_bytes = b""
    cloud = None
    reference_fn = None
    if "dataset" in pcfg:
        dataset_path = Path(pcfg["dataset"])
        dataset_bytes = dataset_path.read_bytes()
        cloud, _ = read_cloud_csv(dataset_path)
    elif mode == "inverse":
        raise ConfigError(
            f"inverse run for {preset_name} needs a [problem] dataset file "
            "(produce one with the generate command)"
        )
    problem = build_problem(
        preset_name, mode, cloud=cloud, resolution=resolution, scaled=scaled,
        reference_fn=reference_fn,
    )
    return problem, dataset_bytes, pcfg


def _settings_from_config(cfg: dict, weighting: str) -> TrainSettings:
    tcfg = cfg.get("training", {})
    kwargs = {k: tcfg[k] for k in
              ("seed", "lr_theta", "lr_alpha", "lr_load", "lr_sa", "sa_all_points")
              if k in tcfg}
    return TrainSettings(epochs=tcfg.get("epochs", 1000), weighting=weighting, **kwargs)


def _finish_run(
    out_dir: Path,
    problem: Problem,
    settings: TrainSettings,
    result: TrainResult | None,
    manifest: dict,
    error: TrainingDiverged | None = None,
) -> int:
    from .plots import plot_load_convergence, plot_loss_curves

    status = "ok" if error is None else "diverged"
    metrics = result.metrics if result is not None else error.metrics
    checkpoint = result.checkpoint if result is not None else error.checkpoint
    if metrics is not None:
        metrics.to_csv(out_dir / "metrics.csv")
        plots = out_dir / "plots"
        plots.mkdir(exist_ok=True)
        if metrics.epochs:
            plot_loss_curves(metrics, plots / "loss.svg")
            if problem.mode == "inverse":
                true = {s.seg_id: s.true_load for s in problem.segments}
                plot_load_convergence(metrics, true, plots / "loads.svg")
    if checkpoint is not None:
        save_checkpoint(checkpoint, out_dir / "model.ckpt")
    final: dict = {}
    if metrics is not None and metrics.epochs:
        final["terms"] = {k: v[-1] for k, v in metrics.terms.items()}
        final["alphas"] = {k: v[-1] for k, v in metrics.alphas.items()}
        final["loads"] = {str(s): metrics.loads[s][-1] for s in metrics.segment_ids}
        if np.isfinite(metrics.mse_true[-1]):
            final["mse_true"] = metrics.mse_true[-1]
        manifest["wall_seconds"] = metrics.wall_seconds
    manifest.update(
        status=status,
        scales=problem.scales.as_dict(),
        backend=backends.active_backend(),
        final=final,
    )
    if error is not None:
        manifest["error"] = str(error)
    write_manifest(out_dir, manifest)
    if error is not None:
        print(f"[train] DIVERGED: {error}", file=sys.stderr)
        return 1
    return 0


def _cmd_train(args) -> int:
    cfg = load_config(args.config)
    problem, dataset_bytes, pcfg = _problem_from_config(cfg)
    weighting = pcfg.get("weighting", "uncertainty")
    settings = _settings_from_config(cfg, weighting)
    out_dir = prepare_run_dir(args.out, args.config)
    manifest = {
        "command": "train",
        "preset": problem.name,
        "mode": problem.mode,
        "weighting": weighting,
        "seed": settings.seed,
        "epochs": settings.epochs,
        "content_hash": content_hash(Path(args.config).read_bytes(), dataset_bytes),
    }
    try:
        result = train(problem, settings)
    except TrainingDiverged as err:
        return _finish_run(out_dir, problem, settings, None, manifest, err)
    code = _finish_run(out_dir, problem, settings, result, manifest)
    if problem.mode == "inverse":
        loads = {s: result.metrics.loads[s][-1] for s in result.metrics.segment_ids}
        print(f"[train] final loads (physical units): {loads}")
    return code


def _cmd_finetune(args) -> int:
    cfg = load_config(args.config)
    tcfg = cfg.get("transfer", {})
    source = args.from_checkpoint or tcfg.get("checkpoint")
    if not source:
        raise ConfigError("finetune needs --from or a [transfer] checkpoint entry")
    freeze_layers = args.freeze if args.freeze is not None else tcfg.get("freeze_layers", 3)
    inherit = tcfg.get("inherit_task_weights", True)
    if args.inherit_weights is not None:
        inherit = args.inherit_weights == "true"

    checkpoint = load_checkpoint(source)
    problem, dataset_bytes, pcfg = _problem_from_config(cfg)
    weighting = pcfg.get("weighting", "uncertainty")
    settings = _settings_from_config(cfg, weighting)
    state = prepare_finetune(checkpoint, problem, freeze_layers, inherit)
    out_dir = prepare_run_dir(args.out, args.config)
    manifest = {
        "command": "finetune",
        "preset": problem.name,
        "mode": problem.mode,
        "weighting": weighting,
        "seed": settings.seed,
        "epochs": settings.epochs,
        "content_hash": content_hash(Path(args.config).read_bytes(), dataset_bytes),
        "source_checkpoint": str(source),
        "source_checkpoint_hash": content_hash(Path(source).read_bytes()),
        "freeze_layers": freeze_layers,
        "inherit_task_weights": inherit,
    }
    try:
        result = finetune(state, problem, settings)
    except TrainingDiverged as err:
        return _finish_run(out_dir, problem, settings, None, manifest, err)
    return _finish_run(out_dir, problem, settings, result, manifest)


# ---------------------------------------------------------------------------
# eval
# ---------------------------------------------------------------------------


def _cmd_eval(args) -> int:
    from .plots import plot_field

    checkpoint = load_checkpoint(args.checkpoint)
    cloud, provenance = read_cloud_csv(args.dataset)
    preset = get_preset(checkpoint.problem)
    problem = build_problem(checkpoint.problem, "inverse", cloud=cloud)
    out_dir = prepare_run_dir(args.out)

    pred = problem.predict_displacement(checkpoint.params, cloud.coords)
    axes = "xyz"[: cloud.dim]
    with open(out_dir / "field.csv", "w") as fh:
        cols = list(axes) + ["tag"] + [f"u{a}_pred" for a in axes] + [f"u{a}_obs" for a in axes]
        fh.write(",".join(cols) + "\n")
        for i in range(cloud.n):
            row = [repr(float(v)) for v in cloud.coords[i]]
            row.append(cloud.tags[i])
            row += [repr(float(v)) for v in pred[i]]
            row += ["" if np.isnan(v) else repr(float(v)) for v in cloud.observed[i]]
            fh.write(",".join(row) + "\n")

    report: dict = {"checkpoint": str(args.checkpoint), "dataset": str(args.dataset),
                    "provenance": provenance}
    data_idx = cloud.indices("data")
    if len(data_idx):
        diff = problem.scales.scale_displacement(pred[data_idx] - cloud.observed[data_idx])
        report["mse_data_scaled"] = float(np.mean(np.sum(diff**2, axis=1)))
    if preset.oracle is not None:
        col = cloud.indices("collocation")
        truth = preset.oracle_displacement(cloud.coords[col])
        diff = problem.scales.scale_displacement(pred[col] - truth)
        report["mse_true_scaled"] = float(np.mean(np.sum(diff**2, axis=1)))
    (out_dir / "report.json").write_text(json.dumps(report, indent=2, sort_keys=True))

    col = cloud.indices("collocation")
    fields = {f"u{a}": pred[col][:, k] for k, a in enumerate(axes)}
    plot_field(cloud.coords[col], fields, out_dir / "field.svg")
    print(f"[eval] report -> {out_dir / 'report.json'}")
    return 0


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pinnload",
        description="Forward elasticity and inverse boundary-load identification "
                    "with physics-informed networks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a dataset CSV for a preset")
    g.add_argument("--preset", required=True, choices=list_presets())
    g.add_argument("--noise", help="relative L2 noise level(s), e.g. 0.1 or 0.1,0.12")
    g.add_argument("--monitoring", help="number of monitoring points, or 'all'")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.add_argument("--resolution", help="overrides like n_r=24,n_beta=24")
    g.add_argument("--ref-checkpoint", help="reuse a forward reference solve")
    g.add_argument("--ref-epochs", type=int, help="budget for the reference solve")
    g.add_argument("--ref-seed", type=int, default=0)
    g.set_defaults(func=_cmd_generate)

    t = sub.add_parser("train", help="train a problem from a config file")
    t.add_argument("--config", required=True)
    t.add_argument("--out", required=True)
    t.set_defaults(func=_cmd_train)

    f = sub.add_parser("finetune", help="fine-tune from a checkpoint")
    f.add_argument("--config", required=True)
    f.add_argument("--from", dest="from_checkpoint")
    f.add_argument("--freeze", type=int)
    f.add_argument("--inherit-weights", choices=("true", "false"))
    f.add_argument("--out", required=True)
    f.set_defaults(func=_cmd_finetune)

    e = sub.add_parser("eval", help="evaluate a checkpoint on a dataset")
    e.add_argument("--checkpoint", required=True)
    e.add_argument("--dataset", required=True)
    e.add_argument("--out", required=True)
    e.set_defaults(func=_cmd_eval)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, FileNotFoundError, KeyError, ValueError, IOError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
