"""``udet`` command line: gen-data, train, detect, eval, combine.

Exit codes: 0 success, 1 domain error (divergence, undefined metric),
2 usage / configuration / I/O error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from udet.combine import CombineConfig, check_class_spaces, combine_detections
from udet.config import load_config
from udet.data import generate_dataset, load_ground_truth
from udet.detect import read_detections, write_detections
from udet.errors import ConfigurationError, NumericError, ParseError, UndefinedMetricError
from udet.evaluation import error_breakdown, evaluate, parse_similar
from udet.evaluation.report import format_report, plot_error_breakdown, plot_pr_curves, write_pr_files
from udet.nn import Network, load_checkpoint
from udet.nn.network import read_checkpoint_spec
from udet.pipeline import detect, load_dataset, train

log = logging.getLogger("udet")

EXIT_OK, EXIT_DOMAIN, EXIT_USAGE = 0, 1, 2


def _require(path, what):
    if path is None:
        raise ConfigurationError(f"no {what} given")
    if not Path(path).exists():
        raise ConfigurationError(f"{what} {path} does not exist")
    return Path(path)


def _class_names(manifest):
    path = Path(manifest).parent / "classes.txt"
    if path.exists():
        return [line.strip() for line in path.read_text(encoding="utf-8").splitlines() if line.strip()]
    return None


def cmd_gen_data(args, cfg):
    cfg.check_classes()
    train_count = cfg.train_count if args.train_count is None else args.train_count
    test_count = cfg.test_count if args.test_count is None else args.test_count
    for split, stream, count in (("train", 0, train_count), ("test", 1, test_count)):
        spec = replace(cfg.dataset, count=count, stream=stream)
        manifest = generate_dataset(spec, cfg.out / split)
        print(f"{split}\t{manifest}\t{count} images")
    return EXIT_OK


def cmd_train(args, cfg):
    manifest = _require(args.manifest or cfg.train_manifest or cfg.out / "train" / "manifest.txt", "training manifest")
    spec = cfg.network_spec()
    tcfg = cfg.train if args.epochs is None else replace(cfg.train, epochs=args.epochs)
    dataset = load_dataset(manifest)
    net = Network(spec, seed=cfg.seed)
    losses = train(net, dataset, cfg.grid, tcfg, cfg.out)
    last = "final.udet" if losses else "weights_0000.udet"
    print(f"checkpoint\t{cfg.out / last}")
    print(f"loss_log\t{cfg.out / 'loss.log'}")
    if losses:
        print(f"loss\tfirst={losses[0]:.6f}\tlast={losses[-1]:.6f}")
    return EXIT_OK


def cmd_detect(args, cfg):
    checkpoint = _require(args.checkpoint, "checkpoint")
    manifest = _require(args.manifest, "manifest")
    spec = cfg.network_spec()
    stored = read_checkpoint_spec(checkpoint)
    if stored != spec.to_text():
        print("checkpoint spec does not match the configured network", file=sys.stderr)
        print(f"--- checkpoint ({checkpoint})\n{stored}--- configured ({cfg.network})\n{spec.to_text()}", file=sys.stderr)
        return EXIT_USAGE
    net = load_checkpoint(checkpoint, spec)
    dataset = load_dataset(manifest)
    score = cfg.score_threshold if args.score_threshold is None else args.score_threshold
    nms_thr = cfg.nms_threshold if args.nms_threshold is None else args.nms_threshold
    dets = detect(net, dataset, cfg.grid, score, nms_thr, use_nms=not args.no_nms)
    output = Path(args.output) if args.output else cfg.out / "detections.txt"
    output.parent.mkdir(parents=True, exist_ok=True)
    write_detections(output, dets, cfg.grid.C)
    print(f"detections\t{output}\t{len(dets)}")
    return EXIT_OK


def cmd_eval(args, cfg):
    dets, num_classes = read_detections(_require(args.detections, "detections file"))
    manifest = _require(args.manifest, "ground-truth manifest")
    gts = load_ground_truth(manifest)
    unknown = sorted({d.image_id for d in dets} - set(gts))
    if unknown:
        raise ConfigurationError(f"detections reference images not in {manifest}: {', '.join(unknown[:5])}")
    names = _class_names(manifest)
    iou_thr = cfg.eval_iou if args.iou is None else args.iou
    results, mAP = evaluate(dets, gts, num_classes, iou_thr, args.eleven_point)
    breakdown = None
    if args.errors:
        similar = parse_similar(cfg.similar if args.similar is None else args.similar)
        breakdown = error_breakdown(dets, gts, similar)
    report = format_report(results, mAP, names, breakdown, iou_thr, args.eleven_point)
    sys.stdout.write(report)
    cfg.out.mkdir(parents=True, exist_ok=True)
    (cfg.out / "report.tsv").write_text(report, encoding="utf-8")
    plot_pr_curves(results, cfg.out / "pr_curves.png", names)
    if breakdown is not None:
        plot_error_breakdown(breakdown, cfg.out / "error_breakdown.png", names)
    if args.pr_dir:
        write_pr_files(results, args.pr_dir, names)
    return EXIT_OK


def cmd_combine(args, cfg):
    primary, p_classes = read_detections(_require(args.primary, "primary detections file"))
    confirming, c_classes = read_detections(_require(args.confirming, "confirming detections file"))
    check_class_spaces(p_classes, c_classes)
    ccfg = CombineConfig(
        cfg.combine.iou_confirm_threshold if args.iou_threshold is None else args.iou_threshold,
        cfg.combine.boost_weight if args.boost_weight is None else args.boost_weight,
    )
    combined = combine_detections(primary, confirming, ccfg)
    output = Path(args.output) if args.output else cfg.out / "combined.txt"
    output.parent.mkdir(parents=True, exist_ok=True)
    write_detections(output, combined, p_classes if p_classes is not None else c_classes)
    print(f"combined\t{output}\t{len(combined)}")
    return EXIT_OK


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI run configuration", default=argparse.SUPPRESS)
    common.add_argument("--seed", type=int, help="override [run] seed", default=argparse.SUPPRESS)
    common.add_argument("--out", help="output directory (overrides [run] out)", default=argparse.SUPPRESS)
    common.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS)

    parser = argparse.ArgumentParser(prog="udet", description=__doc__.splitlines()[0], parents=[common])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", parents=[common], help="generate train/test synthetic shape datasets")
    p.add_argument("--train-count", type=int)
    p.add_argument("--test-count", type=int)
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("train", parents=[common], help="train a network, writing checkpoints and loss.log")
    p.add_argument("--manifest", help="training manifest (default: [data] train_manifest)")
    p.add_argument("--epochs", type=int)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("detect", parents=[common], help="run a checkpoint over a manifest")
    p.add_argument("checkpoint")
    p.add_argument("manifest")
    p.add_argument("--output", help="detections file (default: OUT/detections.txt)")
    p.add_argument("--score-threshold", type=float)
    p.add_argument("--nms-threshold", type=float)
    p.add_argument("--no-nms", action="store_true", help="skip non-maximal suppression")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("eval", parents=[common], help="AP/mAP report, PR curves, error breakdown")
    p.add_argument("detections")
    p.add_argument("manifest")
    p.add_argument("--errors", action="store_true", help="add the error-type breakdown")
    p.add_argument("--pr-dir", help="write per-class precision-recall tables here")
    p.add_argument("--iou", type=float)
    p.add_argument("--eleven-point", action="store_true", help="VOC-2007 11-point AP")
    p.add_argument("--similar", help="similar class pairs, e.g. '0:1,2:3'")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("combine", parents=[common], help="boost primary detections confirmed by a second detector")
    p.add_argument("primary")
    p.add_argument("confirming")
    p.add_argument("--output", help="combined detections file (default: OUT/combined.txt)")
    p.add_argument("--iou-threshold", type=float)
    p.add_argument("--boost-weight", type=float)
    p.set_defaults(func=cmd_combine)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        cfg = load_config(getattr(args, "config", None), getattr(args, "seed", None), getattr(args, "out", None))
        return args.func(args, cfg)
    except (NumericError, UndefinedMetricError) as exc:
        print(f"udet {args.command}: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except (ConfigurationError, ParseError, OSError) as exc:
        print(f"udet {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
