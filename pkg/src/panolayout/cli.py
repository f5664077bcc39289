"""Command-line entry point: ``panolayout <command> ...``.

Angles are given in degrees. Exit status is 0 on success, 1 when a record
(or the single input) failed for structural reasons such as too few corners,
and 2 for invalid invocations.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import camsim, files, gt, layout3d, metrics, micro, offsets, synth, tensorio
from .layout import LayoutError, LayoutModel
from .sphere import ImageGeometry

EXIT_OK = 0
EXIT_FAILURES = 1
EXIT_USAGE = 2


class UsageError(Exception):
    """Invalid arguments detected after parsing."""


def _outdir(path) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _geometry(args) -> ImageGeometry:
    return ImageGeometry(args.width, args.height)


def _require_seed(args, why: str) -> int:
    if args.seed is None:
        raise UsageError(f"--seed is required {why}")
    return args.seed


def _print_failures(failures: dict[str, str]) -> None:
    for rid in sorted(failures):
        print(f"FAILED {rid}: {failures[rid]}", file=sys.stderr)
    if failures:
        print(f"{len(failures)} record(s) failed", file=sys.stderr)


def _run_records(fn, jobs: list, workers: int) -> list:
    """Apply ``fn`` to each job; results come back in job order."""
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, jobs))
    return [fn(j) for j in jobs]


# --- offsets --------------------------------------------------------------

def cmd_offsets(args) -> int:
    geom = _geometry(args)
    if args.alpha_auto:
        spec = offsets.KernelSpec.matching(geom, args.r, args.rate)
    else:
        spec = offsets.KernelSpec(args.r, np.deg2rad(args.alpha))
    field = offsets.offset_field(geom, spec)
    # (relative column offset, absolute row) of every kernel sample, per output row
    data = np.stack([field.relative_u, field.rows[..., 1]], axis=-1)
    tensorio.save(args.output, data)
    if args.png:
        _offsets_png(args.png, geom, field, args.rows or [geom.height // 2])
    print(f"wrote {args.output} with extents {list(data.shape)}")
    return EXIT_OK


def _offsets_png(path, geom: ImageGeometry, field, rows) -> None:
    img = np.zeros((3,) + geom.shape)
    for v in rows:
        if not 0 <= v < geom.height:
            raise UsageError(f"row {v} outside the image")
        img[:, v, geom.width // 2] = (1.0, 0.2, 0.2)
        pos = field.positions(geom.width // 2, v)
        for u, vv in pos:
            iu = int(np.floor(u)) % geom.width
            iv = int(np.clip(np.round(vv), 0, geom.height - 1))
            img[:, iv, iu] = (1.0, 1.0, 1.0)
    files.write_rgb(path, img)


# --- synthetic data -------------------------------------------------------

def cmd_synth(args) -> int:
    geom = _geometry(args)
    seed = _require_seed(args, "to generate rooms")
    rng = np.random.default_rng(seed)
    out = _outdir(args.output)
    records = []
    for i in range(args.count):
        rid = f"room{i:03d}"
        l3d = synth.random_room(rng, args.walls)
        img = synth.panorama(geom, l3d, rng)
        files.write_rgb(out / f"{rid}.png", img)
        synth.labels_for(geom, l3d).save(out / f"{rid}.json")
        l3d.save(out / f"{rid}_3d.json")
        records.append(files.Record(rid, out / f"{rid}.png", out / f"{rid}.json"))
    files.Manifest(geom, records, out).save(out / "manifest.json")
    print(f"wrote {args.count} room(s) to {out}")
    return EXIT_OK


# --- ground truth and augmentation ---------------------------------------

def _write_maps(out: Path, maps: gt.GroundTruthMaps, prefix: str = "") -> None:
    for name, m in (("edge", maps.edge), ("corner", maps.corner)):
        files.write_gray(out / f"{prefix}{name}.png", m)
        tensorio.save(out / f"{prefix}{name}.cflt", m)


def cmd_gen_gt(args) -> int:
    layout = files.load_labels(args.labels)
    if args.width is not None:
        layout = files.rescale_layout(layout, _geometry(args))
    maps = gt.render_gt_maps(layout, args.thickness, args.sigma)
    out = _outdir(args.output)
    _write_maps(out, maps)
    print(f"edge positives {100 * gt.positive_fraction(maps.edge):.2f}%, "
          f"corner positives {100 * gt.positive_fraction(maps.corner):.2f}%")
    return EXIT_OK


def cmd_augment(args) -> int:
    size = (args.width, args.height)
    img = files.read_panorama(args.panorama, size)
    geom = ImageGeometry(img.shape[2], img.shape[1])
    layout = files.load_labels(args.labels, geom)
    if args.mode == "erase":
        seed = _require_seed(args, "for random erasing")
        img = gt.random_erase(img, seed, count=args.count)
    elif args.mode == "mirror":
        img, layout = gt.augment_horizontal(img, layout, "mirror")
    else:
        shift = args.shift
        if shift is None:
            seed = _require_seed(args, "for a random rotation (or pass --shift)")
            shift = int(np.random.default_rng(seed).integers(0, geom.width))
        img, layout = gt.augment_horizontal(img, layout, "rotate", shift)
    out = _outdir(args.output)
    files.write_rgb(out / "panorama.png", img)
    layout.save(out / "labels.json")
    return EXIT_OK


# --- layout recovery --------------------------------------------------------

def _extract_one(job) -> tuple[str, dict | None, str | None]:
    rid, corner_path, min_peak, nms = job
    corner_path = Path(corner_path)
    if corner_path.is_dir():
        # a gen-gt style directory of maps
        prob = _load_maps(corner_path)[1]
    else:
        prob = files.read_map(corner_path)
    if prob.ndim == 3:
        prob = prob[-1]
    try:
        cs = layout3d.extract_corners(prob, min_peak, nms)
        return rid, cs.to_layout().to_json(), None
    except LayoutError as exc:
        return rid, None, str(exc)


def cmd_extract_layout(args) -> int:
    if args.manifest:
        man = files.Manifest.load(args.manifest)
        jobs = []
        failures = {}
        for r in man.records:
            if "corner" not in r.prediction:
                failures[r.id] = "no corner prediction"
                continue
            jobs.append((r.id, r.prediction["corner"], args.min_peak, args.nms_radius))
    elif args.input:
        jobs, failures = [("layout", Path(args.input), args.min_peak, args.nms_radius)], {}
    else:
        raise UsageError("give a corner map or --manifest")
    single = not args.manifest and args.output.endswith(".json")
    out = Path(args.output).parent if single else _outdir(args.output)
    out.mkdir(parents=True, exist_ok=True)
    for rid, doc, err in _run_records(_extract_one, jobs, args.jobs):
        if err is not None:
            failures[rid] = err
        else:
            files.dump_json(Path(args.output) if single else out / f"{rid}.json", doc)
    _print_failures(failures)
    return EXIT_FAILURES if failures else EXIT_OK


def cmd_reconstruct(args) -> int:
    try:
        layout = files.load_labels(args.layout)
        l3d = layout3d.reconstruct_3d(layout.geometry, layout)
    except LayoutError as exc:
        print(f"FAILED: {exc}", file=sys.stderr)
        return EXIT_FAILURES
    l3d.save(args.output)
    print(f"floor area {l3d.area:.4f}, ceiling height {l3d.ceiling_height:.4f} (camera heights)")
    return EXIT_OK


# --- evaluation ---------------------------------------------------------------

def _load_maps(path) -> np.ndarray:
    """Edge and corner maps ``(2, H, W)``.

    ``path`` is a stacked tensor file, a labels JSON (rendered on the fly) or a
    directory holding ``edge`` and ``corner`` maps as written by ``gen-gt``.
    """
    path = Path(path)
    if path.is_dir():
        maps = []
        for name in ("edge", "corner"):
            found = [path / f"{name}{ext}" for ext in (".cflt", ".png") if (path / f"{name}{ext}").exists()]
            if not found:
                raise UsageError(f"{path}: no {name}.cflt or {name}.png")
            maps.append(files.read_map(found[0]))
        return np.stack(maps)
    if path.suffix.lower() == ".json":
        return gt.render_gt_maps(files.load_labels(path)).as_array()
    m = files.read_map(path)
    if m.ndim != 3 or m.shape[0] != 2:
        raise UsageError(f"{path}: expected a (2, H, W) tensor, got {m.shape}")
    return m


def _map_report(pred: np.ndarray, target: np.ndarray, threshold: float) -> dict:
    return {name: metrics.map_metrics(pred[i], target[i], threshold) for i, name in enumerate(("edge", "corner"))}


def _mean_maps(reports: list[dict]) -> dict:
    return {m: {k: float(np.mean([r[m][k] for r in reports])) for k in metrics.MAP_COLUMNS}
            for m in ("edge", "corner")}


def cmd_eval_maps(args) -> int:
    failures = {}
    if args.manifest:
        man = files.Manifest.load(args.manifest)
        per = {}
        for r in man.records:
            if not {"edge", "corner"} <= set(r.prediction) or r.labels is None:
                failures[r.id] = "needs edge and corner predictions and labels"
                continue
            pred = np.stack([files.read_map(r.prediction["edge"]), files.read_map(r.prediction["corner"])])
            target = gt.render_gt_maps(files.load_labels(r.labels, man.geometry)).as_array()
            per[r.id] = _map_report(pred, target, args.threshold)
        summary = _mean_maps(list(per.values())) if per else {}
        doc = {"records": per, "mean": summary, "failures": failures}
    elif args.pred and args.gt:
        summary = _map_report(_load_maps(args.pred), _load_maps(args.gt), args.threshold)
        doc = summary
    else:
        raise UsageError("give PRED and GT or --manifest")
    _emit(args, doc, metrics.map_table(summary) if summary else "no records evaluated")
    _print_failures(failures)
    return EXIT_FAILURES if failures else EXIT_OK


def _eval_layout_pair(job) -> tuple[str, dict | None, str | None]:
    rid, pred_path, gt_path, geom = job
    try:
        gt_layout = files.load_labels(gt_path, geom)
        geom = gt_layout.geometry
        pred_layout = files.load_labels(pred_path, geom)
        rep = metrics.evaluate_layout(
            geom, pred_layout, gt_layout,
            layout3d.reconstruct_3d(geom, pred_layout), layout3d.reconstruct_3d(geom, gt_layout),
        )
        return rid, rep.to_json(), None
    except LayoutError as exc:
        return rid, None, str(exc)


def cmd_eval_layout(args) -> int:
    if args.manifest:
        man = files.Manifest.load(args.manifest)
        jobs, failures = [], {}
        for r in man.records:
            if "layout" not in r.prediction or r.labels is None:
                failures[r.id] = "needs a predicted layout and labels"
                continue
            jobs.append((r.id, r.prediction["layout"], r.labels, man.geometry))
    elif args.pred and args.gt:
        jobs, failures = [("layout", args.pred, args.gt, None)], {}
    else:
        raise UsageError("give PRED and GT or --manifest")
    per = {}
    for rid, rep, err in _run_records(_eval_layout_pair, jobs, args.jobs):
        if err is not None:
            failures[rid] = err
        else:
            per[rid] = rep
    mean = {}
    for key in ("iou3d", "ce", "pe_ss", "pe_cs"):
        vals = [p[key] for p in per.values() if key in p]
        if vals:
            mean[key] = float(np.mean(vals))
    table = metrics.layout_table({args.name: metrics.MetricReport(**mean)}) if per else "no records evaluated"
    doc = {"records": per, "mean": mean, "failures": failures} if args.manifest else (per.get("layout") or {})
    _emit(args, doc, table)
    _print_failures(failures)
    return EXIT_FAILURES if failures else EXIT_OK


def _emit(args, doc: dict, table: str) -> None:
    text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if args.output:
        Path(args.output).write_text(text)
        Path(args.output).with_suffix(".txt").write_text(table + "\n")
    else:
        sys.stdout.write(text)
    print(table)


# --- camera simulation --------------------------------------------------------

def _scene(args) -> tuple[np.ndarray, LayoutModel]:
    """Input panorama and labels, or a synthetic room drawn from ``--seed``."""
    if args.panorama or args.labels:
        if not (args.panorama and args.labels):
            raise UsageError("give both --panorama and --labels")
        img = files.read_panorama(args.panorama, (args.width, args.height))
        geom = ImageGeometry(img.shape[2], img.shape[1])
        return img, files.load_labels(args.labels, geom)
    seed = _require_seed(args, "to synthesise a room")
    geom = _geometry(args)
    rng = np.random.default_rng(seed)
    l3d = synth.random_room(rng)
    return synth.panorama(geom, l3d, rng), synth.labels_for(geom, l3d)


def _simulate(args, kind: str, values: np.ndarray) -> int:
    img, layout = _scene(args)
    geom = layout.geometry
    l3d = layout3d.reconstruct_3d(geom, layout)
    out = _outdir(args.output)
    files.write_rgb(out / "source.png", img)
    layout.save(out / "source.json")
    records, perts = [], {}
    for i, value in enumerate(values):
        if kind == "translation":
            pert = camsim.RigidPerturbation(t_y=float(value), max_translation=max(camsim.MAX_TRANSLATION, abs(value)))
        else:
            pert = camsim.RigidPerturbation(**{kind: float(np.deg2rad(value))})
        rid = f"{kind}{i:03d}"
        try:
            warped = camsim.perturb_panorama(img, l3d, pert)
            labels = camsim.transform_labels(layout, pert)
        except LayoutError as exc:
            print(f"FAILED {rid}: {exc}", file=sys.stderr)
            return EXIT_FAILURES
        files.write_rgb(out / f"{rid}.png", warped)
        labels.save(out / f"{rid}.json")
        records.append(files.Record(rid, out / f"{rid}.png", out / f"{rid}.json"))
        perts[rid] = {"pitch_deg": float(np.rad2deg(pert.pitch)), "yaw_deg": float(np.rad2deg(pert.yaw)),
                      "t_y": pert.t_y}
    doc = files.Manifest(geom, records, out).to_json()
    doc["perturbations"] = perts
    files.dump_json(out / "manifest.json", doc)
    print(f"wrote {len(records)} perturbed panorama(s) to {out}")
    return EXIT_OK


def cmd_sim_rotate(args) -> int:
    return _simulate(args, args.axis, np.linspace(args.min, args.max, args.steps))


def cmd_sim_translate(args) -> int:
    return _simulate(args, "translation", np.linspace(args.min, args.max, args.steps))


# --- training -------------------------------------------------------------------

def cmd_train_micro(args) -> int:
    seed = _require_seed(args, "for training")
    geom = ImageGeometry(args.size, args.size // 2)
    rng = np.random.default_rng(seed)
    if args.panorama:
        if not args.labels:
            raise UsageError("--panorama needs --labels")
        img = files.read_panorama(args.panorama, geom.shape[::-1])
        layout = files.load_labels(args.labels, geom)
    else:
        l3d = synth.random_room(rng)
        img = synth.panorama(geom, l3d, rng)
        layout = synth.labels_for(geom, l3d)
    target = gt.render_gt_maps(layout).as_array()
    x = micro.standardize(img)
    channels = [3] + [args.hidden] * (args.layers - 1) + [2]
    net = micro.MicroNet.build(geom, channels, seed, equi=not args.standard,
                               resolution=args.kernel, dropout=args.dropout)
    try:
        history = micro.train_micro(net, [(x, target)], args.epochs, seed, lr=args.lr)
    except micro.TrainingDiverged as exc:
        print(f"FAILED: {exc}", file=sys.stderr)
        return EXIT_FAILURES
    out = _outdir(args.output)
    files.dump_json(out / "history.json", {
        "loss": history, "epochs": args.epochs, "seed": seed, "channels": channels,
        "equi": not args.standard, "final_ratio": history[-1] / history[0] if history else None,
    })
    for i, p in enumerate(net.params()):
        tensorio.save(out / f"param{i:02d}.cflt", p)
    pred = net.predict(x)
    files.write_gray(out / "pred_edge.png", pred[0])
    files.write_gray(out / "pred_corner.png", pred[1])
    if history:
        print(f"loss {history[0]:.4f} -> {history[-1]:.4f} ({100 * history[-1] / history[0]:.2f}% of initial)")
    return EXIT_OK


# --- overlays -----------------------------------------------------------------

PRED_COLOR = (1.0, 0.5, 1.0)   # light magenta
GT_COLOR = (0.55, 0.0, 0.55)   # dark magenta


def cmd_render_overlay(args) -> int:
    img = files.read_panorama(args.panorama, (args.width, args.height))
    geom = ImageGeometry(img.shape[2], img.shape[1])
    out = img.copy()
    for path, color in ((args.gt, GT_COLOR), (args.pred, PRED_COLOR)):
        if path is None:
            continue
        layout = files.load_labels(path, geom, validate=False)
        mask = gt.rasterize_segments(geom, gt.layout_segments(layout)) > 0
        out[:, mask] = np.asarray(color)[:, None]
    files.write_rgb(args.output, out)
    return EXIT_OK


# --- parser ---------------------------------------------------------------------

def _add_size(p, width=256, height=128) -> None:
    p.add_argument("--width", type=int, default=width)
    p.add_argument("--height", type=int, default=height)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="panolayout", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("offsets", help="export the equirectangular kernel sampling field")
    _add_size(p)
    p.add_argument("-r", type=int, default=3, help="kernel resolution (odd)")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--alpha", type=float, help="kernel field of view in degrees")
    g.add_argument("--alpha-auto", action="store_true", help="match a standard r x r kernel at the equator")
    p.add_argument("--rate", type=int, default=1, help="dilation rate used with --alpha-auto")
    p.add_argument("-o", "--output", default="offsets.cflt")
    p.add_argument("--png", help="also draw the sample positions of --rows")
    p.add_argument("--rows", type=int, nargs="*")
    p.set_defaults(func=cmd_offsets)

    p = sub.add_parser("synth", help="generate synthetic rooms, panoramas and labels")
    _add_size(p)
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--walls", type=int, help="walls per room (default: random 4-8)")
    p.add_argument("--seed", type=int)
    p.add_argument("-o", "--output", default="synth")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("gen-gt", help="render edge and corner ground-truth maps from labels")
    p.add_argument("labels")
    p.add_argument("--sigma", type=float, default=gt.DEFAULT_SIGMA)
    p.add_argument("--thickness", type=int, default=gt.DEFAULT_THICKNESS)
    p.add_argument("--width", type=int, help="render at this width (labels are rescaled)")
    p.add_argument("--height", type=int)
    p.add_argument("-o", "--output", default=".")
    p.set_defaults(func=cmd_gen_gt)

    p = sub.add_parser("augment", help="random erasing, horizontal mirror or rotation")
    p.add_argument("panorama")
    p.add_argument("labels")
    p.add_argument("--mode", choices=("rotate", "mirror", "erase"), default="rotate")
    p.add_argument("--shift", type=int, help="rotation in columns (random from --seed if omitted)")
    p.add_argument("--count", type=int, default=1, help="rectangles to erase")
    p.add_argument("--seed", type=int)
    _add_size(p)
    p.add_argument("-o", "--output", default="augmented")
    p.set_defaults(func=cmd_augment)

    p = sub.add_parser("extract-layout", help="corner peaks to a layout JSON")
    p.add_argument("input", nargs="?", help="corner probability map (.cflt or .png) or a gen-gt directory")
    p.add_argument("--manifest")
    p.add_argument("--min-peak", type=float, default=layout3d.DEFAULT_MIN_PEAK)
    p.add_argument("--nms-radius", type=int)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("-o", "--output", default=".",
                   help="output directory, or a .json file for a single map")
    p.set_defaults(func=cmd_extract_layout)

    p = sub.add_parser("reconstruct", help="layout JSON to a 3D room JSON")
    p.add_argument("layout")
    p.add_argument("-o", "--output", default="room3d.json")
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("eval-maps", help="IoU/Acc/P/R/F1 of edge and corner maps")
    p.add_argument("pred", nargs="?", help="(2, H, W) tensor, or directory with edge and corner maps")
    p.add_argument("gt", nargs="?", help="tensor or labels JSON")
    p.add_argument("--manifest")
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("-o", "--output", help="JSON report path (a .txt table is written next to it)")
    p.set_defaults(func=cmd_eval_maps)

    p = sub.add_parser("eval-layout", help="3DIoU, corner error and pixel errors")
    p.add_argument("pred", nargs="?")
    p.add_argument("gt", nargs="?")
    p.add_argument("--manifest")
    p.add_argument("--name", default="prediction", help="row label in the text table")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_eval_layout)

    for name, func, helptext in (("sim-rotate", cmd_sim_rotate, "rotate the camera over a range of angles"),
                                 ("sim-translate", cmd_sim_translate, "move the camera vertically")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--panorama")
        p.add_argument("--labels")
        p.add_argument("--min", type=float, required=True,
                       help="degrees" if name == "sim-rotate" else "fraction of the room height")
        p.add_argument("--max", type=float, required=True)
        p.add_argument("--steps", type=int, default=11)
        p.add_argument("--seed", type=int)
        if name == "sim-rotate":
            p.add_argument("--axis", choices=("pitch", "yaw"), default="pitch")
        _add_size(p)
        p.add_argument("-o", "--output", default=name)
        p.set_defaults(func=func)

    p = sub.add_parser("train-micro", help="overfit a small conv net on one panorama")
    p.add_argument("--panorama")
    p.add_argument("--labels")
    p.add_argument("--size", type=int, default=64, help="panorama width (height is half)")
    p.add_argument("--layers", type=int, default=3)
    p.add_argument("--hidden", type=int, default=64)
    p.add_argument("--kernel", type=int, default=5, help="kernel resolution r")
    p.add_argument("--standard", action="store_true", help="standard instead of equirectangular convolutions")
    p.add_argument("--dropout", type=float, default=0.0)
    p.add_argument("--epochs", type=int, default=300)
    p.add_argument("--lr", type=float, default=2.5e-4)
    p.add_argument("--seed", type=int)
    p.add_argument("-o", "--output", default="micro")
    p.set_defaults(func=cmd_train_micro)

    p = sub.add_parser("render-overlay", help="draw predicted and ground-truth layouts on a panorama")
    p.add_argument("panorama")
    p.add_argument("--pred")
    p.add_argument("--gt")
    _add_size(p)
    p.add_argument("-o", "--output", default="overlay.png")
    p.set_defaults(func=cmd_render_overlay)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"panolayout {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, FileNotFoundError, IsADirectoryError, tensorio.TensorFormatError) as exc:
        # malformed inputs or invalid parameters
        print(f"panolayout {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
