"""
Pydantic models for growth configuration, presets, bank manifests and evaluation reports.

Every structure that is read from or written to disk goes through one of these models.
"""

import hashlib
import json
import math
from typing import Annotated, Literal

import numpy as np
from pydantic import (
    AfterValidator,
    BaseModel,
    ConfigDict,
    Field,
    field_validator,
    model_validator,
)

from .logging_config import get_logger

logger = get_logger(__name__)

# -----------------------------
#  growth defaults
# -----------------------------

DEFAULT_ATTRACTION_DISTANCE = 5.0
DEFAULT_KILL_DISTANCE = 30.0
DEFAULT_SEGMENT_LENGTH = 5.0
DEFAULT_MURRAY_EXPONENT = 3.0

INSIDE_TOL = 1e-9

MANIFEST_VERSION = 1


def _finite_point(p: tuple[float, float]) -> tuple[float, float]:
    if not all(math.isfinite(c) for c in p):
        raise ValueError(f"point must be finite, got {p}")
    return p


def _ordered_interval(iv: tuple[float, float]) -> tuple[float, float]:
    lo, hi = iv
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise ValueError(f"interval must be finite, got {iv}")
    if lo > hi:
        raise ValueError(f"interval is empty: [{lo}, {hi}]")
    return iv


Point2 = Annotated[tuple[float, float], AfterValidator(_finite_point)]
Interval = Annotated[tuple[float, float], AfterValidator(_ordered_interval)]
IntInterval = Annotated[tuple[int, int], AfterValidator(_ordered_interval)]

# =============================================================================
#  geometry
# =============================================================================

class CircleRegion(BaseModel):
    """Disk given by centre and radius; the radius may be an interval sampled per tree."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    kind: Literal["circle"] = "circle"
    center: Annotated[Point2, Field(description="Centre (x, y) in pixels")]
    radius: Annotated[
        float | Interval,
        Field(description="Radius in pixels, or [lo, hi] to sample uniformly per tree"),
    ]

    @field_validator("radius")
    @classmethod
    def positive_radius(cls, v: float | tuple[float, float]) -> float | tuple[float, float]:
        lo = v[0] if isinstance(v, tuple) else v
        if lo <= 0:
            raise ValueError(f"circle radius must be > 0, got {v}")
        return v

    @property
    def is_resolved(self) -> bool:
        return not isinstance(self.radius, tuple)

    def resolve(self, rng: np.random.Generator) -> "CircleRegion":
        if self.is_resolved:
            return self
        lo, hi = self.radius  # type: ignore[misc]
        return self.model_copy(update={"radius": float(rng.uniform(lo, hi))})

    def bbox(self) -> tuple[float, float, float, float]:
        r = self.radius[1] if isinstance(self.radius, tuple) else self.radius
        cx, cy = self.center
        return cx - r, cy - r, cx + r, cy + r

    def contains(self, pts: np.ndarray) -> np.ndarray:
        if not self.is_resolved:
            raise ValueError("circle radius interval must be resolved before containment tests")
        r = float(self.radius)  # type: ignore[arg-type]
        d2 = (pts[:, 0] - self.center[0]) ** 2 + (pts[:, 1] - self.center[1]) ** 2
        return d2 <= r * r * (1 + INSIDE_TOL) + INSIDE_TOL


class SquareRegion(BaseModel):
    """Axis-aligned square with its top-left corner at `origin`."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    kind: Literal["square"] = "square"
    origin: Annotated[Point2, Field(description="Top-left corner (x, y) in pixels")]
    side: Annotated[float, Field(gt=0, description="Side length in pixels")]

    @property
    def is_resolved(self) -> bool:
        return True

    def resolve(self, rng: np.random.Generator) -> "SquareRegion":
        return self

    def bbox(self) -> tuple[float, float, float, float]:
        x0, y0 = self.origin
        return x0, y0, x0 + self.side, y0 + self.side

    def contains(self, pts: np.ndarray) -> np.ndarray:
        x0, y0, x1, y1 = self.bbox()
        return (
            (pts[:, 0] >= x0 - INSIDE_TOL) & (pts[:, 0] <= x1 + INSIDE_TOL)
            & (pts[:, 1] >= y0 - INSIDE_TOL) & (pts[:, 1] <= y1 + INSIDE_TOL)
        )


Region = Annotated[CircleRegion | SquareRegion, Field(discriminator="kind")]

# =============================================================================
#  roots
# =============================================================================

class FixedPoints(BaseModel):
    """Explicit root positions, one root node per point."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    kind: Literal["fixed"] = "fixed"
    points: Annotated[list[Point2], Field(min_length=1, description="Root positions")]


class UniformBox(BaseModel):
    """A single root drawn uniformly from an axis-aligned box."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    kind: Literal["box"] = "box"
    x_range: Annotated[Interval, Field(description="[x_lo, x_hi] in pixels")]
    y_range: Annotated[Interval, Field(description="[y_lo, y_hi] in pixels")]


RootSpec = Annotated[FixedPoints | UniformBox, Field(discriminator="kind")]

# =============================================================================
#  growth config
# =============================================================================

class GrowthConfig(BaseModel):
    """All parameters needed to grow one tree."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    bound: Annotated[Region, Field(description="Region every node must stay inside")]
    obstacles: Annotated[
        list[Region],
        Field(default_factory=list, description="Regions no node or attractor may enter"),
    ]
    roots: Annotated[RootSpec, Field(description="Root placement")]
    attractor_grid: Annotated[int, Field(ge=1, description="Grid cells per axis (A_g)")]
    jitter: Annotated[float, Field(ge=0, description="Uniform attractor jitter in pixels (A_j)")]
    attraction_distance: Annotated[
        float, Field(default=DEFAULT_ATTRACTION_DISTANCE, gt=0, description="D_a in pixels")
    ]
    kill_distance: Annotated[
        float, Field(default=DEFAULT_KILL_DISTANCE, gt=0, description="D_k in pixels")
    ]
    segment_length: Annotated[
        float, Field(default=DEFAULT_SEGMENT_LENGTH, gt=0, description="L_s in pixels")
    ]
    max_nodes: Annotated[int, Field(ge=1, description="Node cap, roots included")]
    murray_exponent: Annotated[
        float, Field(default=DEFAULT_MURRAY_EXPONENT, gt=0, description="Murray's law exponent n")
    ]
    seed: Annotated[int, Field(default=0, ge=0, lt=1 << 64, description="64-bit seed")]

    @model_validator(mode="after")
    def warn_on_distances(self) -> "GrowthConfig":
        if self.kill_distance <= self.attraction_distance:
            logger.warning(
                f"kill_distance ({self.kill_distance}) does not exceed "
                f"attraction_distance ({self.attraction_distance})"
            )
        return self

    def config_hash(self) -> str:
        """SHA-256 of the canonical JSON form."""
        payload = json.dumps(self.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()

# =============================================================================
#  post-processing recipe
# =============================================================================

class UnionOp(BaseModel):
    """OR the per-component masks together."""
    model_config = ConfigDict(extra="forbid", frozen=True)
    op: Literal["union"] = "union"


class FovOp(BaseModel):
    """Multiply with the preset's field of view."""
    model_config = ConfigDict(extra="forbid", frozen=True)
    op: Literal["fov"] = "fov"


class CropOp(BaseModel):
    """Crop to width x height; unset sizes mean the full canvas (no-op)."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    op: Literal["crop"] = "crop"
    width: Annotated[int | None, Field(default=None, ge=1)]
    height: Annotated[int | None, Field(default=None, ge=1)]
    random: Annotated[bool, Field(default=True, description="Random offset, else centred")]


class FlipOp(BaseModel):
    """Mirror along one axis, or randomly along each axis with p=0.5 when axis is unset."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    op: Literal["flip"] = "flip"
    axis: Annotated[Literal["horizontal", "vertical"] | None, Field(default=None)]


class MorphOp(BaseModel):
    """Binary erosion or dilation with a disk or square element."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    op: Literal["erode", "dilate"]
    shape: Annotated[Literal["disk", "square"], Field(default="disk")]
    size: Annotated[int, Field(default=1, ge=0, description="Disk radius or odd square side")]

    @model_validator(mode="after")
    def odd_square(self) -> "MorphOp":
        if self.shape == "square" and self.size % 2 == 0:
            raise ValueError(f"square side must be odd, got {self.size}")
        return self


PostOp = Annotated[UnionOp | FovOp | CropOp | FlipOp | MorphOp, Field(discriminator="op")]

# =============================================================================
#  preset
# =============================================================================

PresetName = Literal["octa500", "corn", "drive", "chasedb1", "custom"]


class Preset(BaseModel):
    """Growth components, output geometry and post-processing for one curve type."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    name: Annotated[PresetName, Field(description="Preset identifier")]
    growth: Annotated[
        list[GrowthConfig],
        Field(min_length=1, max_length=2, description="One or two growth components"),
    ]
    frame: Annotated[
        tuple[int, int], Field(description="Growth coordinate frame (width, height) in pixels")
    ]
    canvas: Annotated[tuple[int, int], Field(description="Output mask size (width, height)")]
    fov: Annotated[
        CircleRegion | None,
        Field(default=None, description="Field of view in canvas pixels"),
    ]
    post_ops: Annotated[list[PostOp], Field(default_factory=list, description="Ordered recipe")]

    @field_validator("frame", "canvas")
    @classmethod
    def positive_dims(cls, v: tuple[int, int]) -> tuple[int, int]:
        if v[0] < 1 or v[1] < 1:
            raise ValueError(f"dimensions must be positive, got {v}")
        return v

    @model_validator(mode="after")
    def recipe_consistency(self) -> "Preset":
        ops = [p.op for p in self.post_ops]
        if len(self.growth) > 1 and "union" not in ops:
            raise ValueError("multi-component presets need a 'union' post-op")
        if ops.count("union") > 1:
            raise ValueError("at most one 'union' post-op is allowed")
        if "fov" in ops and self.fov is None:
            raise ValueError("'fov' post-op requires a fov region")
        if self.fov is not None and not self.fov.is_resolved:
            raise ValueError("fov radius must be a single value")
        return self

    @property
    def scale(self) -> tuple[float, float]:
        """Canvas pixels per frame pixel along x and y."""
        return self.canvas[0] / self.frame[0], self.canvas[1] / self.frame[1]

    def output_size(self) -> tuple[int, int]:
        """(width, height) after the recipe's crops."""
        w, h = self.canvas
        for op in self.post_ops:
            if isinstance(op, CropOp):
                w, h = op.width or w, op.height or h
        return w, h

# =============================================================================
#  bank manifest
# =============================================================================

EntryKind = Literal["curve", "background", "fov", "skeleton", "inpaint_mask"]


class BankEntry(BaseModel):
    """One persisted artifact."""

    model_config = ConfigDict(extra="forbid")

    id: Annotated[str, Field(min_length=1, description="Unique id within the manifest")]
    path: Annotated[str, Field(min_length=1, description="Path relative to the bank directory")]
    kind: EntryKind
    seed: Annotated[int, Field(ge=0, lt=1 << 64)]
    config_hash: Annotated[str, Field(description="Digest of the config that produced the entry")]
    preset: str

    @field_validator("path")
    @classmethod
    def relative_path(cls, v: str) -> str:
        if v.startswith("/") or ".." in v.split("/"):
            raise ValueError(f"entry paths must be relative to the bank, got {v!r}")
        return v


class BankPair(BaseModel):
    """A (curve, background) draw forming one synthesis input."""

    model_config = ConfigDict(extra="forbid")

    curve_id: str
    background_id: str
    pair_id: str


class BankManifest(BaseModel):
    """Record set tying every artifact in a bank to its seed and config."""

    model_config = ConfigDict(extra="forbid")

    version: Literal[1] = MANIFEST_VERSION
    preset: str
    entries: Annotated[list[BankEntry], Field(default_factory=list)]
    pairs: Annotated[list[BankPair], Field(default_factory=list)]

    @model_validator(mode="after")
    def referential_integrity(self) -> "BankManifest":
        ids = [e.id for e in self.entries]
        if len(ids) != len(set(ids)):
            dupes = sorted({i for i in ids if ids.count(i) > 1})
            raise ValueError(f"duplicate entry ids: {dupes}")

        known = set(ids)
        pair_ids = [p.pair_id for p in self.pairs]
        if len(pair_ids) != len(set(pair_ids)):
            raise ValueError("duplicate pair ids")
        for p in self.pairs:
            if p.curve_id not in known or p.background_id not in known:
                raise ValueError(f"pair {p.pair_id} references a missing entry")
        return self

    def by_kind(self, kind: str) -> list[BankEntry]:
        return [e for e in self.entries if e.kind == kind]

    def entry(self, entry_id: str) -> BankEntry:
        for e in self.entries:
            if e.id == entry_id:
                return e
        raise KeyError(entry_id)

# =============================================================================
#  evaluation report
# =============================================================================

class ImageScores(BaseModel):
    """Scores for one prediction/ground-truth pair (overlap metrics x100)."""

    model_config = ConfigDict(extra="forbid")

    id: str
    dsc: float
    assd: float | None
    se: float
    sp: float
    cldice: float


class ScoreSummary(BaseModel):
    """Mean or std block over all images."""

    model_config = ConfigDict(extra="forbid")

    dsc: float | None = None
    assd: float | None = None
    se: float | None = None
    sp: float | None = None
    cldice: float | None = None


class EvalReport(BaseModel):
    """Evaluation report in the mean/std table convention."""

    model_config = ConfigDict(extra="forbid")

    images: list[ImageScores]
    mean: ScoreSummary
    std: ScoreSummary
    count: Annotated[int, Field(ge=0)]
