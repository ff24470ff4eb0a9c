"""
curvforge command line.

    curvforge gen --preset drive --count 60 --seed 1 --out bank/
    curvforge noisy-skel --in mask.png --out skel.png
    curvforge inpaint-mask --in skel.png --radius 1 --out inpaint.png
    curvforge augment-bg --in raw_backgrounds/ --out bg_bank/
    curvforge assemble --curves bank/ --backgrounds bg_bank/ --count 60 --out pairs/
    curvforge eval --pred preds/ --gt labels/ --report report.json
    curvforge hist --a dir_a/ --b dir_b/
    curvforge preset show drive > drive.json

Exit codes: 0 ok, 1 unexpected failure, 2 invalid input or config, 3 I/O failure,
4 pred/gt pairing mismatch. Results go to stdout, logs to stderr.
"""

import os
import sys
from argparse import ArgumentParser, ArgumentTypeError, Namespace
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import __version__
from .bank import (
    DEFAULT_ROTATIONS,
    assemble_pairs,
    augment_backgrounds,
    build_curve_bank,
    histogram,
    histogram_l1,
    validate_bank,
    write_paired_bank,
)
from .image_io import list_images, read_gray, read_mask, write_mask, write_text_atomic
from .logging_config import get_logger, setup_logging
from .maskgen import (
    ChainMaskParams,
    RectMaskParams,
    default_inpaint_radius,
    inpaint_mask_from_skeleton,
    random_chain_mask,
    random_rect_mask,
)
from .metrics import evaluate
from .presets import get_preset, load_preset, preset_json, preset_names
from .raster import (
    DEFAULT_ELASTIC_ALPHA,
    DEFAULT_ELASTIC_SIGMA,
    ElasticParams,
    elastic_transform,
    skeletonize,
)
from .seeding import split_seed

logger = get_logger(__name__)

ENV_THREADS = "CURVFORGE_THREADS"

EXIT_OK = 0
EXIT_UNEXPECTED = 1
EXIT_INVALID = 2
EXIT_IO = 3
EXIT_PAIRING = 4


class PairingError(LookupError):
    """Prediction and ground-truth folders do not hold the same file stems."""


# -----------------------------
#  helpers
# -----------------------------

def worker_count(requested: int | None = None) -> int:
    """Requested threads (default: cpu count), capped by CURVFORGE_THREADS when set."""
    count = requested or os.cpu_count() or 1
    cap = os.environ.get(ENV_THREADS)
    if cap:
        try:
            count = min(count, max(1, int(cap)))
        except ValueError:
            logger.warning(f"Ignoring non-integer {ENV_THREADS}={cap!r}")
    return max(1, count)


def seed_arg(text: str) -> int:
    """argparse type for master seeds: a non-negative integer."""
    try:
        seed = int(text)
    except ValueError:
        raise ArgumentTypeError(f"invalid seed: {text!r}") from None
    if seed < 0:
        raise ArgumentTypeError(f"seed must be non-negative, got {seed}")
    return seed


def by_stem(files: list[Path]) -> dict[str, Path]:
    """Map file stems to paths; two files sharing a stem (a.png, a.jpg) are rejected."""
    stems: dict[str, Path] = {}
    for p in files:
        if p.stem in stems:
            raise ValueError(f"duplicate stem {p.stem!r}: {stems[p.stem].name} and {p.name}")
        stems[p.stem] = p
    return stems


def input_mask(path: Path) -> np.ndarray:
    #a missing input file is invalid input, not an output failure
    if not Path(path).is_file():
        raise ValueError(f"input mask not found: {path}")
    return read_mask(path)


def pair_by_stem(pred_dir: Path, gt_dir: Path) -> list[tuple[str, Path, Path]]:
    preds = by_stem(list_images(pred_dir))
    gts = by_stem(list_images(gt_dir))

    only_pred = sorted(set(preds) - set(gts))
    only_gt = sorted(set(gts) - set(preds))
    if only_pred or only_gt:
        raise PairingError(
            f"unmatched stems: {len(only_pred)} only in {pred_dir} {only_pred[:5]}, "
            f"{len(only_gt)} only in {gt_dir} {only_gt[:5]}"
        )
    if not preds:
        raise PairingError(f"no images found in {pred_dir}")
    return [(stem, preds[stem], gts[stem]) for stem in sorted(preds)]


# -----------------------------
#  commands
# -----------------------------

def cmd_gen(args: Namespace) -> int:
    preset = load_preset(args.config) if args.config else get_preset(args.preset)
    build_curve_bank(preset, args.count, args.seed, args.out, threads=worker_count(args.threads))
    print(args.out / "manifest.json")
    return EXIT_OK


def cmd_noisy_skel(args: Namespace) -> int:
    mask = input_mask(args.input)
    skel = skeletonize(mask)
    if args.alpha > 0:
        skel = elastic_transform(skel, ElasticParams(alpha=args.alpha, sigma=args.sigma, seed=args.seed))
    write_mask(args.out, skel)
    logger.info(f"Noisy skeleton: {int(mask.sum())} -> {int(skel.sum())} foreground px")
    print(args.out)
    return EXIT_OK


def cmd_inpaint_mask(args: Namespace) -> int:
    skel = input_mask(args.input)
    h, w = skel.shape
    radius = default_inpaint_radius(w, h) if args.radius is None else args.radius

    mask = inpaint_mask_from_skeleton(skel, radius)
    if args.rects:
        params = RectMaskParams.for_canvas(w, h, seed=split_seed(args.seed, 0), count=(args.rects, args.rects))
        mask |= random_rect_mask(w, h, params)
    if args.chains:
        params = ChainMaskParams(chain_count_range=(args.chains, args.chains), seed=split_seed(args.seed, 1))
        mask |= random_chain_mask(w, h, params)

    write_mask(args.out, mask)
    logger.info(f"Inpainting mask: radius {radius}, {args.rects} rects, {args.chains} chains")
    print(args.out)
    return EXIT_OK


def cmd_augment_bg(args: Namespace) -> int:
    files = list_images(args.input)
    if not files:
        raise ValueError(f"no images found in {args.input}")
    images = {stem: read_gray(p) for stem, p in by_stem(files).items()}
    augment_backgrounds(images, args.out, flips=args.flips, rotations=args.rotations)
    print(args.out / "manifest.json")
    return EXIT_OK


def cmd_assemble(args: Namespace) -> int:
    curves = validate_bank(args.curves)
    backgrounds = validate_bank(args.backgrounds)
    manifest = assemble_pairs(curves, backgrounds, args.count, args.seed)
    print(write_paired_bank(manifest, args.curves, args.backgrounds, args.out))
    return EXIT_OK


def cmd_eval(args: Namespace) -> int:
    pairs = pair_by_stem(args.pred, args.gt)
    masks = [(stem, read_mask(p), read_mask(g)) for stem, p, g in pairs]
    report = evaluate(masks, threads=worker_count(args.threads))
    write_text_atomic(args.report, report.model_dump_json(indent=2) + "\n")
    print(args.report)
    return EXIT_OK


def cmd_hist(args: Namespace) -> int:
    a = histogram(read_gray(p) for p in list_images(args.a))
    b = histogram(read_gray(p) for p in list_images(args.b))
    print(f"{histogram_l1(a, b):.6f}")
    return EXIT_OK


def cmd_preset(args: Namespace) -> int:
    if args.action == "list":
        print("\n".join(preset_names()))
        return EXIT_OK
    if not args.name:
        raise ValueError("preset show needs a preset name")
    sys.stdout.write(preset_json(get_preset(args.name)))
    return EXIT_OK


# -----------------------------
#  parser
# -----------------------------

def build_parser() -> ArgumentParser:
    parser = ArgumentParser(
        prog="curvforge",
        description="Synthetic curvilinear masks, banks and segmentation metrics",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="Debug logging")
    parser.add_argument("--log-level", default=None, help="Log level name (default: CURVFORGE_LOG_LEVEL or INFO)")

    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="Grow a curve bank from a preset")
    source = gen.add_mutually_exclusive_group(required=True)
    source.add_argument("--preset", help=f"Built-in preset ({', '.join(preset_names())})")
    source.add_argument("--config", type=Path, help="Preset JSON (as printed by `preset show`)")
    gen.add_argument("--count", type=int, default=1, help="Number of curves")
    gen.add_argument("--seed", type=seed_arg, default=0, help="Master seed")
    gen.add_argument("--out", type=Path, required=True, help="Bank directory")
    gen.add_argument("--threads", type=int, default=None, help="Worker threads")
    gen.set_defaults(func=cmd_gen)

    skel = sub.add_parser("noisy-skel", help="Skeletonize a mask and jitter it elastically")
    skel.add_argument("--in", dest="input", type=Path, required=True, help="Mask PNG")
    skel.add_argument("--alpha", type=float, default=DEFAULT_ELASTIC_ALPHA, help="Displacement scale in px")
    skel.add_argument("--sigma", type=float, default=DEFAULT_ELASTIC_SIGMA, help="Gaussian smoothing in px")
    skel.add_argument("--seed", type=seed_arg, default=0)
    skel.add_argument("--out", type=Path, required=True)
    skel.set_defaults(func=cmd_noisy_skel)

    inpaint = sub.add_parser("inpaint-mask", help="Dilated skeleton plus random rectangles and chains")
    inpaint.add_argument("--in", dest="input", type=Path, required=True, help="Skeleton PNG")
    inpaint.add_argument("--radius", type=int, default=None, help="Dilation radius (default scales with canvas)")
    inpaint.add_argument("--rects", type=int, default=0, help="Number of random rectangles")
    inpaint.add_argument("--chains", type=int, default=0, help="Number of random chains")
    inpaint.add_argument("--seed", type=seed_arg, default=0)
    inpaint.add_argument("--out", type=Path, required=True)
    inpaint.set_defaults(func=cmd_inpaint_mask)

    augment = sub.add_parser("augment-bg", help="Flip/rotate backgrounds into a background bank")
    augment.add_argument("--in", dest="input", type=Path, required=True, help="Folder of background images")
    augment.add_argument(
        "--rotations", type=float, nargs="*", default=list(DEFAULT_ROTATIONS), help="Degrees in [0, 90]"
    )
    augment.add_argument(
        "--flips", nargs="*", choices=["horizontal", "vertical"], default=["horizontal", "vertical"]
    )
    augment.add_argument("--out", type=Path, required=True)
    augment.set_defaults(func=cmd_augment_bg)

    assemble = sub.add_parser("assemble", help="Pair curves with backgrounds")
    assemble.add_argument("--curves", type=Path, required=True, help="Curve bank directory")
    assemble.add_argument("--backgrounds", type=Path, required=True, help="Background bank directory")
    assemble.add_argument("--count", type=int, required=True)
    assemble.add_argument("--seed", type=seed_arg, default=0)
    assemble.add_argument("--out", type=Path, required=True)
    assemble.set_defaults(func=cmd_assemble)

    ev = sub.add_parser("eval", help="Score predictions against ground truth")
    ev.add_argument("--pred", type=Path, required=True)
    ev.add_argument("--gt", type=Path, required=True)
    ev.add_argument("--report", type=Path, required=True, help="Output JSON report")
    ev.add_argument("--threads", type=int, default=None)
    ev.set_defaults(func=cmd_eval)

    hist = sub.add_parser("hist", help="L1 distance between the intensity histograms of two folders")
    hist.add_argument("--a", type=Path, required=True)
    hist.add_argument("--b", type=Path, required=True)
    hist.set_defaults(func=cmd_hist)

    preset = sub.add_parser("preset", help="Show or list built-in presets")
    preset.add_argument("action", choices=["show", "list"])
    preset.add_argument("name", nargs="?")
    preset.set_defaults(func=cmd_preset)

    return parser


def run(func: Callable[[Namespace], int], args: Namespace) -> int:
    """Run a command, mapping failures onto exit codes."""
    try:
        return func(args)
    except PairingError as e:
        logger.error(f"Pairing failed: {e}")
        return EXIT_PAIRING
    except OSError as e:
        logger.error(f"I/O failure: {e}")
        return EXIT_IO
    except ValueError as e:
        logger.error(f"Invalid input: {e}")
        return EXIT_INVALID
    except Exception:
        logger.exception("Unexpected failure")
        return EXIT_UNEXPECTED


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging("DEBUG" if args.verbose else args.log_level)
    logger.debug(f"curvforge {__version__}: {args.command}")
    return run(args.func, args)


if __name__ == "__main__":
    raise SystemExit(main())
