"""Command-line interface.

Subcommands: stylize, texture, texture-interp, reconstruct, whiten-viz,
metric, inspect-weights. Weights come from --weights (a model directory or a
bare .wctw file) or the WCT_WEIGHTS environment variable.

Exit codes: 0 success, 2 usage, 3 I/O, 4 degenerate/numerical failure,
5 malformed weight container.
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from pathlib import Path

import PIL

from . import pipeline
from .errors import (
    ConfigurationError,
    DegenerateInputError,
    InvalidArgumentError,
    NumericalError,
    WeightFormatError,
)
from .tensors import load_image, save_image
from .weights import resolve_store

__all__ = ["build_parser", "main", "entry"]

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_NUMERICAL = 4
EXIT_WEIGHTS = 5

ENV_WEIGHTS = "WCT_WEIGHTS"


def _levels_arg(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(p) for p in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"levels must be comma-separated integers, got {text!r}"
        ) from None


def _size_arg(text: str) -> tuple[int, int]:
    parts = text.lower().split("x")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"size must look like 256x256, got {text!r}")
    try:
        w, h = int(parts[0]), int(parts[1])
    except ValueError:
        raise argparse.ArgumentTypeError(f"size must look like 256x256, got {text!r}") from None
    if w < 1 or h < 1:
        raise argparse.ArgumentTypeError(f"size must be positive, got {text!r}")
    return w, h


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--weights",
        default=None,
        help=f"model directory or .wctw file (default: ${ENV_WEIGHTS})",
    )
    common.add_argument(
        "--eps",
        type=float,
        default=pipeline.DEFAULT_EPS,
        help="eigenvalue cutoff for rank truncation (default: %(default)s)",
    )
    common.add_argument(
        "--save-intermediates",
        metavar="DIR",
        default=None,
        help="write each level's decoded image into DIR",
    )

    parser = argparse.ArgumentParser(
        prog="wct",
        description="Universal style transfer via feature whitening and coloring.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("stylize", parents=[common], help="stylize a content image")
    p.add_argument("--content", required=True)
    p.add_argument(
        "--style",
        action="append",
        required=True,
        help="style image; repeat together with --mask for spatial control",
    )
    p.add_argument(
        "--mask",
        action="append",
        default=None,
        help="region mask image (>50%% gray selects); one per --style",
    )
    p.add_argument("--alpha", type=float, default=0.6,
                   help="stylization strength (default: %(default)s)")
    p.add_argument("--levels", type=_levels_arg, default=(5, 4, 3, 2, 1),
                   metavar="L,L,...", help="level schedule (default: 5,4,3,2,1)")
    p.add_argument("--style-scale", type=float, default=1.0,
                   help="resize factor applied to the style image (default: %(default)s)")
    p.add_argument("--no-blend-per-level", action="store_true",
                   help="blend only at the last level instead of every level")
    p.add_argument("--out", required=True)

    p = sub.add_parser("texture", parents=[common], help="synthesize a texture from noise")
    p.add_argument("--style", required=True)
    p.add_argument("--size", type=_size_arg, default=(256, 256), metavar="WxH",
                   help="output size (default: 256x256)")
    p.add_argument("--seed", type=int, default=0, help="noise seed (default: %(default)s)")
    p.add_argument("--passes", type=int, default=3,
                   help="synthesis passes over the level schedule (default: %(default)s)")
    p.add_argument("--levels", type=_levels_arg, default=(5, 4, 3, 2, 1),
                   metavar="L,L,...", help="level schedule (default: 5,4,3,2,1)")
    p.add_argument("--out", required=True)

    p = sub.add_parser("texture-interp", parents=[common],
                       help="synthesize a texture mixing two styles")
    p.add_argument("--style-a", required=True)
    p.add_argument("--style-b", required=True)
    p.add_argument("--beta", type=float, required=True,
                   help="weight of style A in [0, 1]; style B gets 1 - beta")
    p.add_argument("--size", type=_size_arg, default=(256, 256), metavar="WxH",
                   help="output size (default: 256x256)")
    p.add_argument("--seed", type=int, default=0, help="noise seed (default: %(default)s)")
    p.add_argument("--passes", type=int, default=3,
                   help="synthesis passes (default: %(default)s)")
    p.add_argument("--levels", type=_levels_arg, default=(5, 4, 3, 2, 1),
                   metavar="L,L,...", help="level schedule (default: 5,4,3,2,1)")
    p.add_argument("--out", required=True)

    p = sub.add_parser("reconstruct", parents=[common],
                       help="autoencode an image through one level")
    p.add_argument("--input", required=True)
    p.add_argument("--level", type=int, required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("whiten-viz", parents=[common],
                       help="decode whitened features (diagnostic)")
    p.add_argument("--input", required=True)
    p.add_argument("--level", type=int, required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("metric", parents=[common],
                       help="covariance distance between a result and a style")
    p.add_argument("--result", required=True)
    p.add_argument("--style", required=True)

    p = sub.add_parser("inspect-weights", parents=[common],
                       help="list the tensors in a weight container")

    return parser


def _store(args):
    path = args.weights or os.environ.get(ENV_WEIGHTS)
    if not path:
        raise UsageError(
            f"no weights given: pass --weights or set ${ENV_WEIGHTS}"
        )
    return resolve_store(path)


class UsageError(Exception):
    pass


def _intermediate_writer(args):
    if not args.save_intermediates:
        return None
    out_dir = Path(args.save_intermediates)
    out_dir.mkdir(parents=True, exist_ok=True)
    counter = {"n": 0}

    def write(level, img):
        counter["n"] += 1
        save_image(out_dir / f"step{counter['n']:02d}_level{level}.png", img)

    return write


def _cmd_stylize(args) -> int:
    cfg = pipeline.StylizationConfig(
        alpha=args.alpha,
        levels=args.levels,
        style_scale=args.style_scale,
        eps=args.eps,
        blend_per_level=not args.no_blend_per_level,
    )
    store = _store(args)
    content = load_image(args.content)
    masks = args.mask or []
    if masks and len(masks) != len(args.style):
        raise UsageError("need exactly one --mask per --style for spatial stylization")
    if len(args.style) > 1 and not masks:
        raise UsageError("multiple --style images require --mask regions")
    started = time.perf_counter()
    callback = _intermediate_writer(args)
    if masks:
        regions = [
            pipeline.StyleRegion(mask=_load_mask(m), style=load_image(s))
            for s, m in zip(args.style, masks)
        ]
        out = pipeline.stylize_spatial(content, regions, cfg, store, level_callback=callback)
    else:
        out = pipeline.stylize_multi(
            content, load_image(args.style[0]), cfg, store, level_callback=callback
        )
    elapsed = time.perf_counter() - started
    save_image(args.out, out)
    h, w = content.shape[0], content.shape[1]
    print(f"stylize: {w}x{h} content in {elapsed:.3f}s", file=sys.stderr)
    return EXIT_OK


def _load_mask(path):
    img = load_image(path)
    return img.mean(axis=2) > 0.5


def _cmd_texture(args) -> int:
    cfg = pipeline.StylizationConfig(
        alpha=1.0, levels=args.levels, eps=args.eps, seed=args.seed, passes=args.passes
    )
    store = _store(args)
    w, h = args.size
    callback = _intermediate_writer(args)
    started = time.perf_counter()
    out = pipeline.synthesize_texture(
        load_image(args.style), h, w, cfg, store, level_callback=callback
    )
    elapsed = time.perf_counter() - started
    save_image(args.out, out)
    print(f"texture: {w}x{h} in {elapsed:.3f}s", file=sys.stderr)
    return EXIT_OK


def _cmd_texture_interp(args) -> int:
    cfg = pipeline.StylizationConfig(
        alpha=1.0, levels=args.levels, eps=args.eps, seed=args.seed, passes=args.passes
    )
    store = _store(args)
    w, h = args.size
    out = pipeline.interpolate_textures(
        load_image(args.style_a), load_image(args.style_b), args.beta, h, w, cfg, store
    )
    save_image(args.out, out)
    return EXIT_OK


def _cmd_reconstruct(args) -> int:
    store = _store(args)
    out = pipeline.reconstruct(load_image(args.input), args.level, store)
    save_image(args.out, out)
    return EXIT_OK


def _cmd_whiten_viz(args) -> int:
    store = _store(args)
    out = pipeline.whiten_viz(load_image(args.input), args.level, store, eps=args.eps)
    save_image(args.out, out)
    return EXIT_OK


def _cmd_metric(args) -> int:
    store = _store(args)
    ls, log_ls = pipeline.style_distance(
        load_image(args.result), load_image(args.style), store
    )
    print(f"L_s={ls:.6g} log_L_s={log_ls:.6g}")
    return EXIT_OK


def _cmd_inspect(args) -> int:
    store = _store(args)
    meta = ", ".join(f"{k}={v}" for k, v in sorted(store.metadata.items()))
    print(f"# {len(store.tensor_order)} tensors" + (f"; {meta}" if meta else ""))
    for name in store.tensor_order:
        arr = store.tensors[name]
        dims = "x".join(str(d) for d in arr.shape)
        print(f"{name} {dims} float32")
    return EXIT_OK


_COMMANDS = {
    "stylize": _cmd_stylize,
    "texture": _cmd_texture,
    "texture-interp": _cmd_texture_interp,
    "reconstruct": _cmd_reconstruct,
    "whiten-viz": _cmd_whiten_viz,
    "metric": _cmd_metric,
    "inspect-weights": _cmd_inspect,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if e.code else EXIT_OK
    try:
        return _COMMANDS[args.command](args)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except InvalidArgumentError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except WeightFormatError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_WEIGHTS
    except ConfigurationError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_WEIGHTS
    except (DegenerateInputError, NumericalError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (OSError, PIL.UnidentifiedImageError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO


def entry() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    entry()
