"""
Curve banks, background banks and paired synthesis manifests.

Layout of a bank directory:
    <bank>/manifest.json
    <bank>/curves/*.png
    <bank>/backgrounds/*.png
    <bank>/masks/*.png
"""

import hashlib
import shutil
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

from .colonize import CurveTree, compute_radii, grow, union_trees
from .curvmodels import (
    BankEntry,
    BankManifest,
    BankPair,
    CropOp,
    FlipOp,
    FovOp,
    MorphOp,
    Preset,
    UnionOp,
)
from .image_io import write_gray, write_mask, write_text_atomic
from .logging_config import get_logger
from .raster import (
    Axis,
    Disk,
    EmptyMaskError,
    GrayImage,
    Mask,
    Square,
    apply_fov,
    center_crop,
    check_same_shape,
    circle_mask,
    dilate,
    erode,
    flip,
    random_crop,
    random_flip,
    rasterize,
    rotate,
)
from .seeding import SEED_MASK, make_rng, split_seed

logger = get_logger(__name__)

# -----------------------------
#  layout
# -----------------------------

MANIFEST_NAME = "manifest.json"
CURVE_DIR = "curves"
BACKGROUND_DIR = "backgrounds"
MASK_DIR = "masks"

DEFAULT_ROTATIONS = (0.0, 30.0, 60.0, 90.0)

RECIPE_STREAM = 1000   # child key of the item seed used by post-ops


class ManifestError(ValueError):
    """Bank contents do not match the manifest, or a bank is unusable."""


# -----------------------------
#  manifest io
# -----------------------------

def write_manifest(bank_dir: Path, manifest: BankManifest) -> Path:
    path = Path(bank_dir) / MANIFEST_NAME
    write_text_atomic(path, manifest.model_dump_json(indent=2) + "\n")
    logger.info(f"Wrote manifest with {len(manifest.entries)} entries, {len(manifest.pairs)} pairs: {path}")
    return path


def read_manifest(bank_dir: Path) -> BankManifest:
    path = Path(bank_dir) / MANIFEST_NAME
    return BankManifest.model_validate_json(path.read_text(encoding="utf-8"))


def validate_bank(bank_dir: Path, manifest: BankManifest | None = None) -> BankManifest:
    """Parse (if needed) and check that every entry's file exists."""
    bank_dir = Path(bank_dir)
    manifest = manifest or read_manifest(bank_dir)
    missing = [e.path for e in manifest.entries if not (bank_dir / e.path).is_file()]
    if missing:
        raise ManifestError(f"{len(missing)} manifest paths missing under {bank_dir}: {missing[:5]}")
    return manifest


def preset_hash(preset: Preset) -> str:
    return hashlib.sha256(preset.model_dump_json().encode("utf-8")).hexdigest()


# -----------------------------
#  curves
# -----------------------------

def grow_components(preset: Preset, item_seed: int) -> list[CurveTree]:
    """One tree per growth component, each on its own seed derived from the item seed."""
    trees = []
    for k, config in enumerate(preset.growth):
        seeded = config.model_copy(update={"seed": split_seed(item_seed, k)})
        trees.append(compute_radii(grow(seeded), seeded.murray_exponent))
    return trees


def _apply_op(mask: Mask, op, rng: np.random.Generator, fov: Mask | None) -> Mask:
    if isinstance(op, FovOp):
        return apply_fov(mask, fov)
    if isinstance(op, CropOp):
        w = op.width or mask.shape[1]
        h = op.height or mask.shape[0]
        if op.random:
            return random_crop(mask, w, h, rng)
        return center_crop(mask, w, h)
    if isinstance(op, FlipOp):
        return random_flip(mask, rng) if op.axis is None else flip(mask, op.axis)
    if isinstance(op, MorphOp):
        se = Disk(radius=op.size) if op.shape == "disk" else Square(side=op.size)
        return erode(mask, se) if op.op == "erode" else dilate(mask, se)
    raise ValueError(f"unsupported post-op {op!r}")


def render_curve(preset: Preset, item_seed: int) -> Mask:
    """Grow, rasterize and post-process one curve mask."""
    trees = grow_components(preset, item_seed)
    rng = make_rng(item_seed, RECIPE_STREAM)
    width, height = preset.canvas
    fov = circle_mask(width, height, preset.fov) if preset.fov is not None else None

    ops = list(preset.post_ops)
    cut = next((i for i, op in enumerate(ops) if isinstance(op, UnionOp)), None)
    before, after = (ops[:cut], ops[cut + 1:]) if cut is not None else ([], ops)

    if not before:
        forest = union_trees(*trees) if len(trees) == 2 else [t for t in trees if t.nodes]
        mask = rasterize(forest, width, height, preset.scale)
    else:
        mask = np.zeros((height, width), dtype=bool)
        for tree in trees:
            part = rasterize([tree], width, height, preset.scale)
            for op in before:
                part = _apply_op(part, op, rng, fov)
            check_same_shape(mask, part)
            mask |= part

    for op in after:
        mask = _apply_op(mask, op, rng, fov)

    logger.debug(
        f"Rendered {preset.name} curve seed={item_seed}: "
        f"{sum(len(t) for t in trees)} nodes, {int(mask.sum())} foreground px"
    )
    return mask


def build_curve_bank(
    preset: Preset,
    count: int,
    master_seed: int,
    out_dir: Path,
    threads: int = 1,
) -> BankManifest:
    """Generate `count` curves with per-item seeds split from master_seed and persist them."""
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")

    out_dir = Path(out_dir)
    digest = preset_hash(preset)
    logger.info(f"Building {preset.name} curve bank: {count} curves, master seed {master_seed}, {threads} threads")

    def make(index: int) -> BankEntry:
        seed = split_seed(master_seed, index)
        rel = f"{CURVE_DIR}/curve_{index:04d}.png"
        write_mask(out_dir / rel, render_curve(preset, seed))
        return BankEntry(
            id=f"curve-{index:04d}", path=rel, kind="curve",
            seed=seed, config_hash=digest, preset=preset.name,
        )

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        entries = list(pool.map(make, range(count)))

    if preset.fov is not None:
        rel = f"{MASK_DIR}/fov.png"
        w, h = preset.canvas
        write_mask(out_dir / rel, circle_mask(w, h, preset.fov))
        entries.append(BankEntry(
            id="fov", path=rel, kind="fov", seed=int(master_seed) & SEED_MASK, config_hash=digest, preset=preset.name,
        ))

    manifest = BankManifest(preset=preset.name, entries=entries)
    write_manifest(out_dir, manifest)
    return manifest


# -----------------------------
#  backgrounds
# -----------------------------

def background_variants(
    image: GrayImage, flips: Iterable[Axis], rotations: Iterable[float]
) -> list[tuple[str, GrayImage]]:
    """(suffix, image) for identity + each flip, under every rotation (none if rotations is empty)."""
    flips = list(flips)
    angles = list(rotations) or [0.0]
    variants = []
    for angle in angles:
        for axis in [None, *flips]:
            img = image if axis is None else flip(image, axis)
            img = rotate(img, float(angle)) if angle else img
            variants.append((f"r{angle:g}-{axis or 'id'}", img))
    return variants


def augment_backgrounds(
    images: dict[str, GrayImage],
    out_dir: Path,
    flips: Iterable[Axis] = ("horizontal", "vertical"),
    rotations: Iterable[float] = DEFAULT_ROTATIONS,
    preset: str = "background",
) -> BankManifest:
    """Persist the closure of the inputs under the requested flips and rotations."""
    if not images:
        raise ValueError("augment_backgrounds needs at least one image")

    out_dir = Path(out_dir)
    flips, rotations = list(flips), list(rotations)
    entries = []

    for name, image in images.items():
        source = hashlib.sha256(np.ascontiguousarray(image).tobytes()).hexdigest()
        for suffix, variant in background_variants(image, flips, rotations):
            entry_id = f"bg-{name}-{suffix}"
            rel = f"{BACKGROUND_DIR}/{entry_id}.png"
            write_gray(out_dir / rel, variant)
            entries.append(BankEntry(
                id=entry_id, path=rel, kind="background", seed=0,
                config_hash=hashlib.sha256(f"{source}:{suffix}".encode()).hexdigest(),
                preset=preset,
            ))

    logger.info(f"Augmented {len(images)} backgrounds into {len(entries)} entries")
    manifest = BankManifest(preset=preset, entries=entries)
    write_manifest(out_dir, manifest)
    return manifest


# -----------------------------
#  pairing
# -----------------------------

def assemble_pairs(
    curves: BankManifest, backgrounds: BankManifest, count: int, seed: int
) -> BankManifest:
    """Draw `count` (curve, background) pairs uniformly with replacement."""
    curve_entries = curves.by_kind("curve")
    bg_entries = backgrounds.by_kind("background")
    if not curve_entries:
        raise ManifestError("curve bank has no curve entries")
    if not bg_entries:
        raise ManifestError("background bank has no background entries")
    if count < 0:
        raise ValueError(f"count must be >= 0, got {count}")

    rng = make_rng(seed)
    ci = rng.integers(0, len(curve_entries), size=count)
    bi = rng.integers(0, len(bg_entries), size=count)

    pairs = [
        BankPair(curve_id=curve_entries[c].id, background_id=bg_entries[b].id, pair_id=f"pair-{k:04d}")
        for k, (c, b) in enumerate(zip(ci, bi))
    ]
    logger.info(f"Drew {count} pairs from {len(curve_entries)} curves x {len(bg_entries)} backgrounds")
    return BankManifest(preset=curves.preset, entries=[*curve_entries, *bg_entries], pairs=pairs)


def write_paired_bank(
    manifest: BankManifest, curve_dir: Path, background_dir: Path, out_dir: Path
) -> Path:
    """Copy every referenced file next to a new manifest so the bank is self-contained."""
    out_dir = Path(out_dir)
    for entry in manifest.entries:
        src_root = Path(curve_dir) if entry.kind == "curve" else Path(background_dir)
        dst = out_dir / entry.path
        dst.parent.mkdir(parents=True, exist_ok=True)
        shutil.copyfile(src_root / entry.path, dst)
    validate_bank(out_dir, manifest)
    return write_manifest(out_dir, manifest)


def preview_composite(background: GrayImage, curve: Mask, intensity_offset: int) -> GrayImage:
    """Background with curve pixels shifted by the offset, clamped to [0, 255]."""
    check_same_shape(background, curve)
    out = background.astype(np.int16)
    out[curve] += int(intensity_offset)
    return np.clip(out, 0, 255).astype(np.uint8)


# -----------------------------
#  histograms
# -----------------------------

@dataclass(frozen=True)
class Histogram256:
    bins: np.ndarray
    total: int


def histogram(images: Iterable[GrayImage]) -> Histogram256:
    bins = np.zeros(256, dtype=np.int64)
    for img in images:
        bins += np.bincount(np.asarray(img, dtype=np.uint8).ravel(), minlength=256)
    return Histogram256(bins=bins, total=int(bins.sum()))


def histogram_l1(a: Histogram256, b: Histogram256) -> float:
    """L1 distance between normalised histograms, in [0, 2]."""
    if a.total == 0 or b.total == 0:
        raise EmptyMaskError("histogram distance needs at least one pixel on each side")
    return float(np.abs(a.bins / a.total - b.bins / b.total).sum())
