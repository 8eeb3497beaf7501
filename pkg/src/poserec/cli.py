"""Command-line front end: index, query, split, gan-train, gan-sample.

Exit codes: 0 on success, 1 on I/O or environment failures, 2 on
validation and domain errors.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .exceptions import IoError, PoseRecError, ValidationError
from .gan import (GanConfig, generate_samples, load_model, load_split, save_model, save_split,
                  split_datasets, train_gan, write_loss_log)
from .imaging import ColorSpace, load_image
from .index import (DEFAULT_K, IndexConfig, build_index, export_results, load_index,
                    query_top_k, save_index)
from .metrics import MetricKind

log = logging.getLogger("poserec")


def _hidden(text):
    try:
        widths = tuple(int(t) for t in text.split(",") if t.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated widths, got {text!r}")
    if not widths:
        raise argparse.ArgumentTypeError("need at least one hidden width")
    return widths


def cmd_index(args) -> int:
    config = IndexConfig(bins=args.bins, color_space=args.color_space,
                         grid_rows=args.grid, grid_cols=args.grid)
    idx = build_index(args.dir, config, n_jobs=args.jobs)
    save_index(idx, args.out)
    for entry_id, reason in idx.skipped:
        log.info("skipped %s: %s", entry_id, reason)
    print(f"indexed {len(idx)} images ({len(idx.skipped)} skipped)")
    return 0


def cmd_query(args) -> int:
    idx = load_index(args.index)
    query = load_image(args.input)
    res = query_top_k(idx, query, args.metric, args.k)
    export_results(res, idx, args.out_dir)
    print(f"{'rank':>4}  {'score':>14}  id")
    for rank, (entry_id, score) in enumerate(res.items, start=1):
        print(f"{rank:>4}  {score:>14.10f}  {entry_id}")
    return 0


def cmd_split(args) -> int:
    try:
        manifest = json.loads(Path(args.results).read_text(encoding="utf-8"))
        items = manifest["items"]
        ids = [it["id"] for it in items]
        paths = {it["id"]: it["source_path"] for it in items}
    except OSError as exc:
        raise IoError(f"cannot read {args.results}: {exc}") from exc
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise ValidationError(f"{args.results}: not a results manifest ({exc})") from None
    split = split_datasets(ids, args.seed, paths)
    save_split(split, args.out)
    print("set A: " + ", ".join(split.set_a))
    print("set B: " + ", ".join(split.set_b))
    return 0


def cmd_gan_train(args) -> int:
    config = GanConfig(image_side=args.size, channels=3 if args.rgb else 1,
                       latent_dim=args.latent_dim, g_hidden=args.g_hidden,
                       d_hidden=args.d_hidden, learning_rate=args.lr, beta1=args.beta1,
                       beta2=args.beta2, eps=args.adam_eps, epochs=args.epochs, seed=args.seed)
    split = load_split(args.split)
    model, losses = train_gan(split, config)
    save_model(model, args.out)
    write_loss_log(losses, args.loss_log)
    last = losses[-1]
    print(f"trained {config.epochs} epochs ({len(losses)} iterations): "
          f"d_loss={last.d_loss:.4f} g_loss={last.g_loss:.4f}")
    return 0


def cmd_gan_sample(args) -> int:
    model = load_model(args.model)
    paths = generate_samples(model, args.n, args.out_dir, seed=args.seed)
    print(f"wrote {len(paths)} samples to {args.out_dir}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="random seed (default: 0)")
    common.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")

    parser = argparse.ArgumentParser(
        prog="poserec",
        description="Recommend similar images by color histogram and train a small GAN on them.")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", required=True)

    p = sub.add_parser("index", parents=[common], help="histogram every image under a directory")
    p.add_argument("--dir", required=True, type=Path)
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--bins", type=int, default=32)
    p.add_argument("--color-space", default="hsv", choices=[c.value for c in ColorSpace])
    p.add_argument("--grid", type=int, default=3, help="G for a GxG region grid")
    p.add_argument("--jobs", type=int, default=1, help="decoder threads")
    p.set_defaults(func=cmd_index)

    p = sub.add_parser("query", parents=[common], help="export the top-k matches for an image")
    p.add_argument("--index", required=True, type=Path)
    p.add_argument("--input", required=True, type=Path)
    p.add_argument("--out-dir", required=True, type=Path)
    p.add_argument("--metric", default="bhattacharyya", choices=[m.value for m in MetricKind])
    p.add_argument("--k", type=int, default=DEFAULT_K)
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("split", parents=[common], help="split 12 results into two sets of 6")
    p.add_argument("--results", required=True, type=Path)
    p.add_argument("--out", required=True, type=Path)
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("gan-train", parents=[common], help="train the GAN on a split")
    p.add_argument("--split", required=True, type=Path)
    p.add_argument("--epochs", type=int, default=2000)
    p.add_argument("--size", type=int, default=16, help="training image side in pixels")
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--loss-log", required=True, type=Path)
    p.add_argument("--rgb", action="store_true", help="train on color instead of grayscale")
    p.add_argument("--latent-dim", type=int, default=64)
    p.add_argument("--g-hidden", type=_hidden, default=(128,))
    p.add_argument("--d-hidden", type=_hidden, default=(128,))
    p.add_argument("--lr", type=float, default=2e-4)
    p.add_argument("--beta1", type=float, default=0.9)
    p.add_argument("--beta2", type=float, default=0.999)
    p.add_argument("--adam-eps", type=float, default=1e-8)
    p.set_defaults(func=cmd_gan_train)

    p = sub.add_parser("gan-sample", parents=[common], help="write generated images as PNG")
    p.add_argument("--model", required=True, type=Path)
    p.add_argument("--n", type=int, default=6)
    p.add_argument("--out-dir", required=True, type=Path)
    p.set_defaults(func=cmd_gan_sample)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except PoseRecError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
