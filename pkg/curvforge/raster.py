"""
Binary raster toolbox: curve rasterization, morphology, thinning, elastic jitter,
field-of-view masking and the crop/flip/rotate augmentations.

Masks are 2-D boolean numpy arrays indexed [row, col]; gray images are 2-D uint8 arrays.
The pixel at column x, row y has its centre at the continuous point (x, y).
"""

from typing import Annotated, Literal

import numpy as np
from PIL import Image
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy import ndimage
from skimage import morphology

from .colonize import CurveForest
from .curvmodels import CircleRegion
from .logging_config import get_logger
from .seeding import make_rng

logger = get_logger(__name__)

Mask = np.ndarray
GrayImage = np.ndarray
Axis = Literal["horizontal", "vertical"]

# -----------------------------
#  raster constants
# -----------------------------

SWEEP_STEP = 0.5            # max spacing of disk stamps along a segment
STAMP_CHUNK = 8192          # disk centres processed per vectorised batch
DISK_TOL = 1e-9

DEFAULT_ELASTIC_ALPHA = 8.0
DEFAULT_ELASTIC_SIGMA = 4.0

EIGHT_NEIGHBOURS = np.ones((3, 3), dtype=bool)


class MaskShapeError(ValueError):
    """Mismatched or zero image dimensions."""


class EmptyMaskError(ValueError):
    """Operation needs at least one foreground pixel (or any pixel at all)."""


# -----------------------------
#  structuring elements
# -----------------------------

class Disk(BaseModel):
    """Offsets with dx^2 + dy^2 <= radius^2."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    radius: Annotated[int, Field(ge=0, description="Disk radius in pixels")]

    def footprint(self) -> np.ndarray:
        r = self.radius
        yy, xx = np.mgrid[-r:r + 1, -r:r + 1]
        return xx * xx + yy * yy <= r * r

    @property
    def reach(self) -> int:
        return self.radius


class Square(BaseModel):
    """All offsets in [-side//2, side//2]^2."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    side: Annotated[int, Field(ge=1, description="Odd side length in pixels")]

    @model_validator(mode="after")
    def odd_side(self) -> "Square":
        if self.side % 2 == 0:
            raise ValueError(f"square side must be odd, got {self.side}")
        return self

    def footprint(self) -> np.ndarray:
        return np.ones((self.side, self.side), dtype=bool)

    @property
    def reach(self) -> int:
        return self.side // 2


StructuringElement = Disk | Square


class ElasticParams(BaseModel):
    """Displacement scale and smoothing of the elastic jitter."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    alpha: Annotated[float, Field(default=DEFAULT_ELASTIC_ALPHA, ge=0, description="Displacement scale in pixels")]
    sigma: Annotated[float, Field(default=DEFAULT_ELASTIC_SIGMA, gt=0, description="Gaussian smoothing in pixels")]
    seed: Annotated[int, Field(default=0, ge=0, lt=1 << 64)]


# -----------------------------
#  helpers
# -----------------------------

def empty_mask(width: int, height: int) -> Mask:
    if width <= 0 or height <= 0:
        raise MaskShapeError(f"canvas must be non-empty, got {width}x{height}")
    return np.zeros((height, width), dtype=bool)


def check_same_shape(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise MaskShapeError(f"shape mismatch: {a.shape[::-1]} vs {b.shape[::-1]} (w x h)")


def round_radius(r: float) -> int:
    return int(np.floor(r + 0.5))


def stamp_disks(mask: Mask, centers: np.ndarray, radius: float) -> None:
    """Set every pixel within `radius` of any centre, in place, clipped to the canvas."""
    centers = np.asarray(centers, dtype=float).reshape(-1, 2)
    if len(centers) == 0:
        return

    h, w = mask.shape
    span = int(np.ceil(radius))
    offsets = np.arange(2 * span + 2)
    r2 = radius * radius + DISK_TOL

    for start in range(0, len(centers), STAMP_CHUNK):
        chunk = centers[start:start + STAMP_CHUNK]
        cx, cy = chunk[:, 0], chunk[:, 1]
        px = np.floor(cx).astype(int)[:, None] - span + offsets[None, :]
        py = np.floor(cy).astype(int)[:, None] - span + offsets[None, :]

        dx2 = (px - cx[:, None]) ** 2
        dy2 = (py - cy[:, None]) ** 2
        inside = dy2[:, :, None] + dx2[:, None, :] <= r2
        inside &= ((py >= 0) & (py < h))[:, :, None]
        inside &= ((px >= 0) & (px < w))[:, None, :]

        n, a, b = np.nonzero(inside)
        mask[py[n, a], px[n, b]] = True


def sweep_points(p0: np.ndarray, p1: np.ndarray, step: float = SWEEP_STEP) -> np.ndarray:
    """Points from p0 to p1 (both included) spaced at most `step` apart."""
    p0, p1 = np.asarray(p0, dtype=float), np.asarray(p1, dtype=float)
    length = float(np.hypot(*(p1 - p0)))
    n = max(1, int(np.ceil(length / step)))
    t = np.linspace(0.0, 1.0, n + 1)[:, None]
    return p0 + t * (p1 - p0)


def stroke_segment(mask: Mask, p0, p1, radius: float) -> None:
    """Disk-swept segment, in place."""
    stamp_disks(mask, sweep_points(p0, p1), radius)


# -----------------------------
#  rasterization
# -----------------------------

def rasterize(
    forest: CurveForest,
    width: int,
    height: int,
    scale: tuple[float, float] = (1.0, 1.0),
) -> Mask:
    """
    Draw a forest as disks swept along every edge.

    Each edge uses the child's rounded radius; every node is also stamped with its own
    radius so single-node trees still show up. Positions are multiplied by `scale`
    (canvas pixels per growth pixel); radii are already canvas pixels.
    """
    mask = empty_mask(width, height)
    sx, sy = scale

    by_radius: dict[int, list[np.ndarray]] = {}
    for tree in forest:
        if not tree.nodes:
            continue
        if not tree.has_radii:
            raise ValueError("rasterize needs radii; run compute_radii first")

        pos = tree.positions() * np.array([sx, sy])
        for i, node in enumerate(tree.nodes):
            r = round_radius(node.radius)
            by_radius.setdefault(r, []).append(pos[i:i + 1])
            if node.parent is not None:
                by_radius[r].append(sweep_points(pos[node.parent], pos[i]))

    for r, chunks in sorted(by_radius.items()):
        stamp_disks(mask, np.concatenate(chunks), r)

    return mask


def circle_mask(width: int, height: int, circle: CircleRegion) -> Mask:
    """Pixels whose centres lie inside the circle."""
    mask = empty_mask(width, height)
    yy, xx = np.mgrid[0:height, 0:width]
    pts = np.column_stack([xx.ravel(), yy.ravel()]).astype(float)
    mask[:] = circle.contains(pts).reshape(height, width)
    return mask


# -----------------------------
#  morphology
# -----------------------------

def dilate(m: Mask, se: StructuringElement) -> Mask:
    return ndimage.binary_dilation(m, structure=se.footprint())


def erode(m: Mask, se: StructuringElement) -> Mask:
    #outside the canvas counts as background
    return ndimage.binary_erosion(m, structure=se.footprint(), border_value=0)


def opening(m: Mask, se: StructuringElement) -> Mask:
    return dilate(erode(m, se), se)


def closing(m: Mask, se: StructuringElement) -> Mask:
    """Closing computed on a frame padded by the element's reach, so m is always kept."""
    pad = se.reach
    framed = np.pad(m, pad)
    closed = erode(dilate(framed, se), se)
    return closed[pad:pad + m.shape[0], pad:pad + m.shape[1]]


def skeletonize(m: Mask) -> Mask:
    """
    Thinning to a one-pixel skeleton (scikit-image's Zhang-style routine), iterated to a fixpoint.

    Any 8-connected component the thinning erases entirely keeps one pixel, the member
    closest to its centroid, so the component count of the input survives.
    """
    m = np.asarray(m, dtype=bool)
    skel = morphology.skeletonize(m)

    labels, count = ndimage.label(m, structure=EIGHT_NEIGHBOURS)
    if count == 0:
        return skel
    index = np.arange(1, count + 1)
    lost = index[~np.asarray(ndimage.maximum(skel.astype(np.uint8), labels, index), dtype=bool)]
    for label in lost:
        ys, xs = np.nonzero(labels == label)
        k = np.argmin((ys - ys.mean()) ** 2 + (xs - xs.mean()) ** 2)
        skel[ys[k], xs[k]] = True
    if len(lost):
        logger.debug(f"Thinning kept one pixel for {len(lost)} erased components")
    return skel


# -----------------------------
#  noise and masking
# -----------------------------

def elastic_transform(m: Mask, p: ElasticParams) -> Mask:
    """Smooth random displacement, nearest-neighbour resampled so the output stays binary."""
    rng = make_rng(p.seed)
    h, w = m.shape

    dx = ndimage.gaussian_filter(rng.uniform(-1, 1, size=(h, w)), p.sigma, mode="constant", cval=0) * p.alpha
    dy = ndimage.gaussian_filter(rng.uniform(-1, 1, size=(h, w)), p.sigma, mode="constant", cval=0) * p.alpha

    yy, xx = np.mgrid[0:h, 0:w]
    out = ndimage.map_coordinates(
        np.asarray(m, dtype=np.uint8), [yy + dy, xx + dx], order=0, mode="constant", cval=0
    )
    return out.astype(bool)


def apply_fov(m: Mask, fov: Mask) -> Mask:
    check_same_shape(m, fov)
    return m & fov


# -----------------------------
#  geometric augmentation
# -----------------------------

def crop(m: np.ndarray, x: int, y: int, out_w: int, out_h: int) -> np.ndarray:
    h, w = m.shape[:2]
    if out_w > w or out_h > h:
        raise MaskShapeError(f"crop {out_w}x{out_h} is larger than input {w}x{h}")
    return m[y:y + out_h, x:x + out_w].copy()


def center_crop(m: np.ndarray, out_w: int, out_h: int) -> np.ndarray:
    h, w = m.shape[:2]
    return crop(m, (w - out_w) // 2, (h - out_h) // 2, out_w, out_h)


def random_crop(m: np.ndarray, out_w: int, out_h: int, rng: np.random.Generator) -> np.ndarray:
    """Crop at an offset drawn uniformly over all valid positions."""
    h, w = m.shape[:2]
    if out_w > w or out_h > h:
        raise MaskShapeError(f"crop {out_w}x{out_h} is larger than input {w}x{h}")
    x = int(rng.integers(0, w - out_w + 1))
    y = int(rng.integers(0, h - out_h + 1))
    return crop(m, x, y, out_w, out_h)


def flip(m: np.ndarray, axis: Axis) -> np.ndarray:
    if axis == "horizontal":
        return np.fliplr(m).copy()
    if axis == "vertical":
        return np.flipud(m).copy()
    raise ValueError(f"unknown flip axis {axis!r}")


def random_flip(m: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Flip each axis independently with probability 0.5."""
    h_flip, v_flip = rng.random(2) < 0.5
    if h_flip:
        m = flip(m, "horizontal")
    if v_flip:
        m = flip(m, "vertical")
    return m


def rotate(
    img: np.ndarray,
    degrees: float | None = None,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """
    Rotate about the centre, keeping the size and filling with 0.

    Masks use nearest-neighbour sampling, gray images bilinear. When `degrees` is not
    given it is drawn uniformly from [0, 90] with `rng`.
    """
    if degrees is None:
        if rng is None:
            raise ValueError("rotate needs degrees or an rng")
        degrees = float(rng.uniform(0.0, 90.0))
    if not 0.0 <= degrees <= 90.0:
        raise ValueError(f"rotation must lie in [0, 90] degrees, got {degrees}")

    if img.dtype == bool:
        pil = Image.fromarray(img.astype(np.uint8) * 255)
        out = pil.rotate(degrees, resample=Image.Resampling.NEAREST, fillcolor=0)
        return np.asarray(out) >= 128

    pil = Image.fromarray(np.asarray(img, dtype=np.uint8))
    out = pil.rotate(degrees, resample=Image.Resampling.BILINEAR, fillcolor=0)
    return np.asarray(out, dtype=np.uint8).copy()
