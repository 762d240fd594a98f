"""Command-line entry point: threshold training, data collection, network
training/evaluation, comparison and occlusion runs, plots, and the teleop
service.

All diagnostics go to stderr; primary outputs (CSV, JSON, model files) are
byte-deterministic for fixed seeds and inputs. PNG plots are emitted next to
them.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import dataset as ds
from . import models, plotting
from . import threshold_learn as tl
from .sim import (
    CameraModel,
    ModelDriver,
    OracleDriver,
    OracleParams,
    SpeedLimits,
    TrackWorld,
    collect_demos,
    compare_traces,
    read_survey_csv,
    replay_on_trace,
    run_episode,
    start_state,
    survey_pixels,
    write_survey_csv,
)
from .sim import worlds as stock_worlds
from .teleop import serve_teleop


def log(*parts):
    print(*parts, file=sys.stderr)


class CliError(RuntimeError):
    pass


def _load_config(path):
    if path is None:
        return {}
    p = Path(path)
    if not p.is_file():
        raise CliError(f"config file not found: {p}")
    with open(p, encoding="utf-8") as f:
        return json.load(f)


def _camera(cfg) -> CameraModel:
    return CameraModel(**cfg.get("camera", {}))


def _limits(cfg) -> SpeedLimits:
    return SpeedLimits(**cfg.get("limits", {}))


def _oracle(cfg) -> OracleDriver:
    return OracleDriver(OracleParams(**cfg.get("oracle", {})))


def _blur(cfg):
    b = cfg.get("blur", {})
    return int(b.get("kernel_size", 5)), float(b.get("sigma", 1.0))


def _load_world(path) -> TrackWorld:
    p = Path(path)
    if not p.is_file():
        raise CliError(f"world file not found: {p}")
    return TrackWorld.load(p)


def _threshold_path(threshold_dir, color):
    return Path(threshold_dir) / f"{color}.threshold.json"


def _load_threshold(args, world):
    path = Path(args.threshold) if args.threshold else _threshold_path(args.threshold_dir, world.color)
    if not path.is_file():
        raise CliError(
            f"threshold file not found: {path} (train one with 'linetrace train-threshold')"
        )
    return tl.load_threshold(path)


def _ensure_outdir(path) -> Path:
    p = Path(path)
    p.mkdir(parents=True, exist_ok=True)
    return p


# -- subcommands ----------------------------------------------------------------


def cmd_train_threshold(args):
    cfg = _load_config(args.config)
    pixels_path = Path(args.pixels)
    if not pixels_path.is_file():
        raise CliError(f"labeled pixel CSV not found: {pixels_path}")
    data = read_survey_csv(pixels_path)
    if len(set(data.labels.tolist())) < 2:
        raise CliError("pixel data contains a single class; need both line and non-line")
    tree = tl.fit_tree(data, max_depth=cfg.get("tree_depth", 2))
    acc = tl.evaluate(tree, data)
    thr = tl.to_threshold(tree, args.color)
    out = _ensure_outdir(args.out_dir) / f"{args.color}.threshold.json"
    tl.save_threshold(thr, out)
    log(f"threshold for color {args.color!r}: training accuracy {acc:.4f}, "
        f"{len(thr.clauses)} clause(s) -> {out}")
    return 0


def cmd_survey(args):
    cfg = _load_config(args.config)
    world = _load_world(args.world)
    lightings = tuple(float(x) for x in args.lightings.split(","))
    data = survey_pixels(world, _camera(cfg), n_poses=args.poses, lightings=lightings,
                         seed=args.seed)
    write_survey_csv(data, args.out)
    n_line = int(np.sum(data.labels == 1))
    log(f"surveyed {len(data)} labeled pixels ({n_line} line) -> {args.out}")
    return 0


def cmd_collect(args):
    cfg = _load_config(args.config)
    world = _load_world(args.world)
    thr = _load_threshold(args, world)
    cam = _camera(cfg)
    limits = _limits(cfg)
    rng = np.random.default_rng(args.seed)
    sets, warned = [], False
    for r in range(args.rounds):
        round_cam = cam
        start = None
        if args.vary and r > 0:
            round_cam = replace(cam, pitch=cam.pitch + float(rng.uniform(-0.025, 0.025)))
            start = start_state(world, s=float(rng.uniform(0.0, world.path.length)))
        driver = _oracle(cfg)
        driver.threshold = thr
        driver.kernel_size, driver.sigma = _blur(cfg)
        trace, demo = collect_demos(world, driver, args.frames, cam=round_cam,
                                    threshold=thr, limits=limits, start=start,
                                    exec_noise=args.noise, noise_seed=args.seed + 101 * r)
        if not trace.completed and not bool(trace.on_track[-1] if len(trace) else True):
            warned = True
            log(f"warning: round {r}: went off track after {len(trace)} frames; partial data kept")
        sets.append(demo)
        log(f"round {r}: {len(demo)} records ({trace.laps(world.path.length):.2f} laps)")
    merged = ds.DemoSet.concat(sets, provenance="oracle")
    ds.write_csv(merged, args.out)
    log(f"collected {len(merged)} demos -> {args.out}")
    return 0 if not warned else 0


def _model_specs(name):
    if name == "mlp":
        return models.build_mlp
    if name == "cnn1d":
        return models.build_cnn1d
    raise CliError(f"unknown model {name!r}; expected 'mlp' or 'cnn1d'")


def cmd_train(args):
    cfg = _load_config(args.config)
    data = ds.read_csv(args.dataset)
    if len(data) < 100:
        raise CliError(f"dataset has {len(data)} records; need at least 100")
    if not args.no_augment:
        data = ds.mirror_augment(data)
    train_set, test_set, val_set = ds.split(data, ds.SplitSpec(seed=args.seed))
    tc = cfg.get("train", {})
    tcfg = models.TrainConfig(
        epochs=args.epochs if args.epochs is not None else tc.get("epochs", 100),
        batch_size=args.batch_size if args.batch_size is not None else tc.get("batch_size", 64),
        learning_rate=args.lr if args.lr is not None else tc.get("learning_rate", 1e-4),
        seed=args.seed,
        stop_train_loss=args.stop_loss if args.stop_loss is not None else tc.get("stop_train_loss"),
    )
    net = _model_specs(args.model)(seed=args.seed)
    log(f"{args.model}: {net.param_count} parameters")
    log(f"training on {len(train_set)} / validating on {len(val_set)} "
        f"(test {len(test_set)}) records, {tcfg.epochs} epochs, batch {tcfg.batch_size}")
    hist = models.train(net, train_set.inputs(), train_set.velocities,
                        val_set.inputs(), val_set.velocities, tcfg)
    out = _ensure_outdir(args.out_dir)
    model_path = out / f"{args.model}.ltnn"
    net.save(model_path)
    hist.to_csv(out / f"{args.model}_history.csv")
    plotting.line_chart(
        [("train loss", hist.train_loss, plotting.BLUE),
         ("val loss", hist.val_loss, plotting.ORANGE)],
        out / f"{args.model}_loss.png",
        title=f"{args.model} loss", xlabel="epoch", ylabel="mse",
    )
    report = models.evaluate(net, test_set.inputs(), test_set.velocities,
                             delta=tc.get("accuracy_delta", 0.1))
    log(f"final train loss {hist.train_loss[-1]:.5f}, val loss {hist.val_loss[-1]:.5f}, "
        f"test loss {report.loss:.5f}, test accuracy {report.accuracy:.3f}")
    log(f"saved {model_path}")
    return 0


def cmd_eval(args):
    data = ds.read_csv(args.dataset)
    from .nn_core import Network

    net = Network.load(args.model)
    report = models.evaluate(net, data.inputs(), data.velocities, delta=args.delta)
    doc = report.to_dict()
    with open(args.out, "w", encoding="utf-8") as f:
        json.dump(doc, f, indent=2, sort_keys=True)
        f.write("\n")
    log(f"evaluated {report.n} records: loss {report.loss:.5f}, accuracy {report.accuracy:.3f}, "
        f"MAE (lin {report.mae_linear:.4f}, ang {report.mae_angular:.4f}) -> {args.out}")
    return 0


def cmd_compare(args):
    cfg = _load_config(args.config)
    world = _load_world(args.world)
    thr = _load_threshold(args, world)
    cam = _camera(cfg)
    limits = _limits(cfg)
    from .nn_core import Network

    net = Network.load(args.model)
    kernel, sigma = _blur(cfg)
    model_name = Path(args.model).stem
    out = _ensure_outdir(args.out_dir)
    lightings = [float(x) for x in args.lighting.split(",")]

    if args.reference == "oracle":
        ref, _ = run_episode(world, _oracle(cfg), args.frames, cam=cam, limits=limits)
    else:
        from .sim import EpisodeTrace

        ref = EpisodeTrace.from_csv(args.reference, world_name=world.name,
                                    driver_name="reference", fps=cam.fps)
        if args.frames and args.frames != len(ref):
            raise CliError(
                f"reference trace has {len(ref)} frames but --frames={args.frames}"
            )

    rows = []
    for lam in lightings:
        driver = ModelDriver(net, thr, kernel, sigma)
        model_trace = replay_on_trace(world, driver, ref, cam=cam, lighting=lam)
        lin_mae, ang_mae = compare_traces(model_trace, ref)
        rows.append((model_name, lam, lin_mae, ang_mae))
        tag = f"{lam:g}".replace(".", "p")
        plotting.line_chart(
            [("reference", ref.pred[:, 0], plotting.BLUE),
             (model_name, model_trace.pred[:, 0], plotting.ORANGE)],
            out / f"compare_linear_l{tag}.png",
            title=f"linear velocity (lighting {lam:g})", xlabel="frame", ylabel="v",
        )
        plotting.line_chart(
            [("reference", ref.pred[:, 1], plotting.BLUE),
             (model_name, model_trace.pred[:, 1], plotting.ORANGE)],
            out / f"compare_angular_l{tag}.png",
            title=f"angular velocity (lighting {lam:g})", xlabel="frame", ylabel="w",
        )
        log(f"{model_name} @ lighting {lam:g}: linear MAE {lin_mae:.4f}, angular MAE {ang_mae:.4f}")

    report = out / "compare_report.csv"
    with open(report, "w", encoding="utf-8", newline="\n") as f:
        f.write("model,lighting,linear_mae,angular_mae\n")
        for name, lam, lin, ang in rows:
            f.write(f"{name},{lam!r},{lin!r},{ang!r}\n")
    log(f"wrote {report}")
    return 0


def cmd_simulate(args):
    cfg = _load_config(args.config)
    world = _load_world(args.world)
    cam = _camera(cfg)
    limits = _limits(cfg)
    if args.driver == "oracle":
        driver = _oracle(cfg)
    else:
        if not args.model:
            raise CliError("--driver model requires --model")
        from .nn_core import Network

        kernel, sigma = _blur(cfg)
        driver = ModelDriver(Network.load(args.model), _load_threshold(args, world),
                             kernel, sigma)
    hook = None
    if args.dump_frames:
        dump_dir = _ensure_outdir(args.dump_frames)
        from PIL import Image

        def hook(k, frame, state):
            if frame is not None:
                Image.fromarray(frame, "RGB").save(dump_dir / f"frame_{k:05d}.png")

    trace, _ = run_episode(world, driver, args.frames, cam=cam, limits=limits,
                           frame_hook=hook)
    trace.to_csv(args.out)
    log(f"{len(trace)} frames, completed={trace.completed}, "
        f"laps={trace.laps(world.path.length):.2f}, mean xtrack {trace.mean_xtrack:.4f} m, "
        f"max xtrack {trace.max_xtrack:.4f} m -> {args.out}")
    return 0


def cmd_heatmap(args):
    data = ds.read_csv(args.dataset)
    out = _ensure_outdir(args.out_dir)
    components = ["linear", "angular"] if args.component == "both" else [args.component]
    for comp in components:
        grid = ds.heatmap(data, comp, bins=args.bins)
        png = out / f"heatmap_{comp}.png"
        plotting.heatmap_chart(grid, png, title=f"{comp} velocity distribution",
                               xlabel=f"{comp} velocity bin", ylabel="record bucket")
        csv_path = out / f"heatmap_{comp}.csv"
        np.savetxt(csv_path, grid, fmt="%d", delimiter=",")
        log(f"{comp}: {int(grid.sum())} counts -> {png}")
    return 0


def cmd_serve(args):
    cfg = _load_config(args.config)
    world = _load_world(args.world)
    thr = None
    thr_path = Path(args.threshold) if args.threshold else _threshold_path(args.threshold_dir, world.color)
    if thr_path.is_file():
        thr = tl.load_threshold(thr_path)
    else:
        log(f"note: no threshold at {thr_path}; recording will be unavailable")
    log(f"serving teleop for world {world.name!r} on http://{args.host}:{args.port}/ "
        f"(websocket at /teleop)")
    serve_teleop(world, port=args.port, host=args.host, cam=_camera(cfg),
                 limits=_limits(cfg), threshold=thr, out_csv=args.out,
                 ui_dir=args.ui_dir)
    return 0


def cmd_make_worlds(args):
    out = _ensure_outdir(args.out_dir)
    for name, factory in stock_worlds.FACTORIES.items():
        path = out / f"{name}.json"
        factory().save(path)
        log(f"wrote {path}")
    occluded = stock_worlds.occluded_test_loop()
    occluded.name = "test_loop_occluded"
    path = out / "test_loop_occluded.json"
    occluded.save(path)
    log(f"wrote {path}")
    return 0


# -- parser ----------------------------------------------------------------------


def build_parser():
    p = argparse.ArgumentParser(
        prog="linetrace",
        description="Camera-based line following at desk scale: learn color "
        "thresholds, collect demonstrations, train velocity regressors, and "
        "evaluate them in simulation.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, out_default=None):
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--config", default=None, help="JSON config file; flags win")

    sp = sub.add_parser("train-threshold", help="fit a color threshold from labeled pixels")
    sp.add_argument("--pixels", required=True, help="labeled pixel CSV (h,s,v,label)")
    sp.add_argument("--color", required=True)
    sp.add_argument("--out-dir", default=".")
    common(sp)
    sp.set_defaults(func=cmd_train_threshold)

    sp = sub.add_parser("survey", help="sample labeled pixels from rendered frames")
    sp.add_argument("--world", required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--poses", type=int, default=12)
    sp.add_argument("--lightings", default="1.0,0.7,0.4")
    common(sp)
    sp.set_defaults(func=cmd_survey)

    sp = sub.add_parser("collect", help="record oracle demonstrations to CSV")
    sp.add_argument("--world", required=True)
    sp.add_argument("--frames", type=int, default=600, help="frames per round")
    sp.add_argument("--rounds", type=int, default=1)
    sp.add_argument("--vary", action="store_true",
                    help="jitter camera pitch and start point between rounds")
    sp.add_argument("--noise", type=float, default=0.08,
                    help="execution noise during collection (normalized units); "
                         "labels stay clean, so demos include recovery behavior")
    sp.add_argument("--threshold", default=None, help="threshold file (default: by color)")
    sp.add_argument("--threshold-dir", default=".")
    sp.add_argument("--out", required=True)
    common(sp)
    sp.set_defaults(func=cmd_collect)

    sp = sub.add_parser("train", help="train a velocity regressor on a demo CSV")
    sp.add_argument("--dataset", required=True)
    sp.add_argument("--model", choices=("mlp", "cnn1d"), default="mlp")
    sp.add_argument("--epochs", type=int, default=None)
    sp.add_argument("--batch-size", type=int, default=None)
    sp.add_argument("--lr", type=float, default=None)
    sp.add_argument("--stop-loss", type=float, default=None,
                    help="stop once epoch training loss reaches this")
    sp.add_argument("--no-augment", action="store_true")
    sp.add_argument("--out-dir", default=".")
    common(sp)
    sp.set_defaults(func=cmd_train)

    sp = sub.add_parser("eval", help="evaluate a model file on a demo CSV")
    sp.add_argument("--dataset", required=True)
    sp.add_argument("--model", required=True)
    sp.add_argument("--delta", type=float, default=0.1)
    sp.add_argument("--out", required=True)
    common(sp)
    sp.set_defaults(func=cmd_eval)

    sp = sub.add_parser("compare", help="model vs reference velocities, Table-style report")
    sp.add_argument("--world", required=True)
    sp.add_argument("--model", required=True)
    sp.add_argument("--reference", default="oracle", help="'oracle' or a trace CSV")
    sp.add_argument("--frames", type=int, default=300)
    sp.add_argument("--lighting", default="1.0", help="comma-separated lighting levels")
    sp.add_argument("--threshold", default=None)
    sp.add_argument("--threshold-dir", default=".")
    sp.add_argument("--out-dir", default=".")
    common(sp)
    sp.set_defaults(func=cmd_compare)

    sp = sub.add_parser("simulate", help="run a closed-loop episode and dump the trace")
    sp.add_argument("--world", required=True)
    sp.add_argument("--driver", choices=("oracle", "model"), default="oracle")
    sp.add_argument("--model", default=None)
    sp.add_argument("--threshold", default=None)
    sp.add_argument("--threshold-dir", default=".")
    sp.add_argument("--frames", type=int, default=600)
    sp.add_argument("--dump-frames", default=None, help="directory for per-frame PNGs")
    sp.add_argument("--out", required=True)
    common(sp)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("heatmap", help="velocity distribution heatmaps for a demo CSV")
    sp.add_argument("--dataset", required=True)
    sp.add_argument("--component", choices=("linear", "angular", "both"), default="both")
    sp.add_argument("--bins", type=int, default=51)
    sp.add_argument("--out-dir", default=".")
    common(sp)
    sp.set_defaults(func=cmd_heatmap)

    sp = sub.add_parser("serve", help="run the teleoperation service")
    sp.add_argument("--world", required=True)
    sp.add_argument("--host", default="127.0.0.1")
    sp.add_argument("--port", type=int, default=8765)
    sp.add_argument("--threshold", default=None)
    sp.add_argument("--threshold-dir", default=".")
    sp.add_argument("--out", default="teleop_demos.csv")
    sp.add_argument("--ui-dir", default=None, help="built browser UI directory")
    common(sp)
    sp.set_defaults(func=cmd_serve)

    sp = sub.add_parser("make-worlds", help="write the stock world JSON files")
    sp.add_argument("--out-dir", default="worlds")
    common(sp)
    sp.set_defaults(func=cmd_make_worlds)

    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (CliError, ValueError, FileNotFoundError, FloatingPointError) as e:
        log(f"error: {e}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
