"""
Inpainting masks: dilated noisy skeletons plus a cocktail of random rectangles and
wide polygonal chains.
"""

from typing import Annotated

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .curvmodels import IntInterval, Interval
from .logging_config import get_logger
from .raster import Disk, Mask, dilate, empty_mask, stroke_segment
from .seeding import make_rng

logger = get_logger(__name__)

# -----------------------------
#  defaults
# -----------------------------

DEFAULT_RECT_COUNT = (1, 4)
DEFAULT_CHAIN_COUNT = (1, 3)
DEFAULT_CHAIN_WIDTH = (8, 24)
DEFAULT_CHAIN_VERTICES = (4, 12)
DEFAULT_CHAIN_STEP = (16.0, 48.0)
DEFAULT_TURN_STD = 0.6
MIN_RECT_SIDE = 16

BASE_INPAINT_RADIUS = 7
BASE_INPAINT_CANVAS = 576


class RectMaskParams(BaseModel):
    """Random rectangle draws; every interval is inclusive."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    count_range: Annotated[IntInterval, Field(default=DEFAULT_RECT_COUNT, description="Rectangles per mask")]
    width_range: Annotated[IntInterval, Field(default=(MIN_RECT_SIDE, 64), description="Widths in pixels")]
    height_range: Annotated[IntInterval, Field(default=(MIN_RECT_SIDE, 64), description="Heights in pixels")]
    seed: Annotated[int, Field(default=0, ge=0, lt=1 << 64)]

    @field_validator("count_range")
    @classmethod
    def non_negative_count(cls, v: tuple[int, int]) -> tuple[int, int]:
        if v[0] < 0:
            raise ValueError(f"count_range must start at >= 0, got {v}")
        return v

    @field_validator("width_range", "height_range")
    @classmethod
    def positive_sides(cls, v: tuple[int, int]) -> tuple[int, int]:
        if v[0] < 1:
            raise ValueError(f"rectangle sides must be >= 1, got {v}")
        return v

    @classmethod
    def for_canvas(cls, w: int, h: int, seed: int = 0, count: tuple[int, int] = DEFAULT_RECT_COUNT) -> "RectMaskParams":
        """Defaults scaled to a canvas: sides in [16, canvas/3]."""
        return cls(
            count_range=count,
            width_range=(min(MIN_RECT_SIDE, w), max(min(MIN_RECT_SIDE, w), w // 3)),
            height_range=(min(MIN_RECT_SIDE, h), max(min(MIN_RECT_SIDE, h), h // 3)),
            seed=seed,
        )


class ChainMaskParams(BaseModel):
    """Random-walk chain draws."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    chain_count_range: Annotated[IntInterval, Field(default=DEFAULT_CHAIN_COUNT, description="Chains per mask")]
    vertices_range: Annotated[IntInterval, Field(default=DEFAULT_CHAIN_VERTICES, description="Vertices per chain")]
    step_range: Annotated[Interval, Field(default=DEFAULT_CHAIN_STEP, description="Segment lengths in pixels")]
    turn_std: Annotated[float, Field(default=DEFAULT_TURN_STD, ge=0, description="Heading change std in radians")]
    width_range: Annotated[IntInterval, Field(default=DEFAULT_CHAIN_WIDTH, description="Stroke widths in pixels")]
    seed: Annotated[int, Field(default=0, ge=0, lt=1 << 64)]

    @model_validator(mode="after")
    def interval_floors(self) -> "ChainMaskParams":
        for name, low in (("chain_count_range", 0), ("vertices_range", 2), ("step_range", 0), ("width_range", 1)):
            iv = getattr(self, name)
            if iv[0] < low:
                raise ValueError(f"{name} must start at >= {low}, got {iv}")
        return self


def random_rect_mask(w: int, h: int, p: RectMaskParams) -> Mask:
    """Filled axis-aligned rectangles with independent widths and heights."""
    if p.width_range[1] > w or p.height_range[1] > h:
        raise ValueError(f"rectangle sizes {p.width_range}x{p.height_range} exceed canvas {w}x{h}")

    rng = make_rng(p.seed)
    mask = empty_mask(w, h)

    count = int(rng.integers(p.count_range[0], p.count_range[1] + 1))
    for _ in range(count):
        rw = int(rng.integers(p.width_range[0], p.width_range[1] + 1))
        rh = int(rng.integers(p.height_range[0], p.height_range[1] + 1))
        x = int(rng.integers(0, w - rw + 1))
        y = int(rng.integers(0, h - rh + 1))
        mask[y:y + rh, x:x + rw] = True

    logger.debug(f"Drew {count} rectangles on {w}x{h}")
    return mask


def random_chain_mask(w: int, h: int, p: ChainMaskParams) -> Mask:
    """Random-walk polylines stroked with a disk; strokes leaving the canvas are clipped."""
    rng = make_rng(p.seed)
    mask = empty_mask(w, h)

    chains = int(rng.integers(p.chain_count_range[0], p.chain_count_range[1] + 1))
    for _ in range(chains):
        vertices = int(rng.integers(p.vertices_range[0], p.vertices_range[1] + 1))
        point = np.array([rng.uniform(0, w), rng.uniform(0, h)])
        heading = rng.uniform(0.0, 2 * np.pi)

        for _ in range(vertices - 1):
            heading += rng.normal(0.0, p.turn_std) if p.turn_std > 0 else 0.0
            length = rng.uniform(*p.step_range)
            width = int(rng.integers(p.width_range[0], p.width_range[1] + 1))
            nxt = point + length * np.array([np.cos(heading), np.sin(heading)])
            stroke_segment(mask, point, nxt, width / 2.0)
            point = nxt

    logger.debug(f"Drew {chains} chains on {w}x{h}")
    return mask


def default_inpaint_radius(w: int, h: int) -> int:
    """7 px up to 576 px canvases, proportionally larger beyond."""
    side = max(w, h)
    if side <= BASE_INPAINT_CANVAS:
        return BASE_INPAINT_RADIUS
    return int(round(BASE_INPAINT_RADIUS * side / BASE_INPAINT_CANVAS))


def inpaint_mask_from_skeleton(skel: Mask, dilation_radius: int) -> Mask:
    if dilation_radius < 0:
        raise ValueError(f"dilation radius must be >= 0, got {dilation_radius}")
    return dilate(skel, Disk(radius=dilation_radius))
