"""
Built-in curve presets.

Growth parameters follow the per-dataset settings: bound, obstacle, root box,
attractor grid A_g, jitter A_j, D_a / D_k / L_s and the post-processing chain. Growth
happens in the preset's frame; rasterization scales to the canvas.
"""

from pathlib import Path

try:
    from rapidfuzz import fuzz, process
except ImportError:
    process = None

from .curvmodels import (
    CircleRegion,
    CropOp,
    FixedPoints,
    FlipOp,
    FovOp,
    GrowthConfig,
    MorphOp,
    Preset,
    SquareRegion,
    UnionOp,
    UniformBox,
)
from .logging_config import get_logger

logger = get_logger(__name__)

SUGGEST_CUTOFF = 60.0


class UnknownPresetError(ValueError):
    """Preset name not among the built-ins."""


def _octa500() -> Preset:
    r = 450.0
    bound = CircleRegion(center=(r, r), radius=r)
    large = GrowthConfig(
        bound=bound,
        roots=FixedPoints(points=[(0.0, r), (2 * r, r), (r, 0.0), (r, 2 * r)]),
        attractor_grid=130,
        jitter=20.0,
        attraction_distance=5.0,
        kill_distance=30.0,
        segment_length=5.0,
        max_nodes=6000,
        seed=0,
    )
    small = GrowthConfig(
        bound=bound,
        obstacles=[CircleRegion(center=(650.0, r), radius=(60.0, 90.0))],
        roots=UniformBox(x_range=(r / 2 - 150, r / 2 + 150), y_range=(r / 2 - 150, r / 2 + 150)),
        attractor_grid=130,
        jitter=20.0,
        attraction_distance=5.0,
        kill_distance=30.0,
        segment_length=5.0,
        max_nodes=6000,
        seed=1,
    )
    return Preset(
        name="octa500",
        growth=[large, small],
        frame=(900, 900),
        canvas=(900, 900),
        #no crop size given; full canvas keeps the op a no-op
        post_ops=[CropOp(), UnionOp()],
    )


def _corn() -> Preset:
    side = 1300.0
    return Preset(
        name="corn",
        growth=[
            GrowthConfig(
                bound=SquareRegion(origin=(0.0, 0.0), side=side),
                roots=UniformBox(x_range=(side / 2 - 30, side / 2 + 30), y_range=(side / 2 - 30, side / 2 + 30)),
                attractor_grid=110,
                jitter=15.0,
                attraction_distance=5.0,
                kill_distance=30.0,
                segment_length=5.0,
                max_nodes=8000,
                seed=0,
            )
        ],
        frame=(1300, 1300),
        canvas=(1300, 1300),
        post_ops=[MorphOp(op="erode", size=1), CropOp(width=384, height=384, random=True)],
    )


def _drive() -> Preset:
    r = 400.0
    return Preset(
        name="drive",
        growth=[
            GrowthConfig(
                bound=CircleRegion(center=(r, r), radius=r),
                obstacles=[CircleRegion(center=(r, r), radius=(40.0, 60.0))],
                roots=UniformBox(x_range=(r / 4 - 30, r / 4 + 30), y_range=(r - 50, r + 50)),
                attractor_grid=85,
                jitter=30.0,
                attraction_distance=5.0,
                kill_distance=30.0,
                segment_length=5.0,
                max_nodes=6000,
                seed=0,
            )
        ],
        frame=(800, 800),
        canvas=(576, 576),
        fov=CircleRegion(center=(287.5, 287.5), radius=288.0),
        post_ops=[FovOp(), FlipOp()],
    )


def _chasedb1() -> Preset:
    side = 960.0
    return Preset(
        name="chasedb1",
        growth=[
            GrowthConfig(
                bound=SquareRegion(origin=(0.0, 0.0), side=side),
                roots=UniformBox(x_range=(side / 2 - 40, side / 2 + 40), y_range=(side / 2 - 40, side / 2 + 40)),
                attractor_grid=100,
                jitter=12.0,
                attraction_distance=3.0,
                kill_distance=35.0,
                segment_length=10.0,
                max_nodes=8000,
                seed=0,
            )
        ],
        frame=(960, 960),
        canvas=(960, 960),
        fov=CircleRegion(center=(479.5, 479.5), radius=480.0),
        post_ops=[FovOp(), MorphOp(op="dilate", size=1)],
    )


BUILTIN_PRESETS = {
    "octa500": _octa500,
    "corn": _corn,
    "drive": _drive,
    "chasedb1": _chasedb1,
}


def preset_names() -> list[str]:
    return list(BUILTIN_PRESETS)


def suggest_preset(name: str) -> str | None:
    """Closest built-in name, if any is close enough."""
    query = name.strip().lower()
    if process is not None:
        match = process.extractOne(query, preset_names(), scorer=fuzz.ratio, score_cutoff=SUGGEST_CUTOFF)
        return match[0] if match else None

    for candidate in preset_names():
        if candidate.startswith(query[:3]) and query:
            return candidate
    return None


def get_preset(name: str) -> Preset:
    key = name.strip().lower()
    if key in BUILTIN_PRESETS:
        return BUILTIN_PRESETS[key]()

    hint = suggest_preset(name)
    message = f"unknown preset {name!r}; choose from {', '.join(preset_names())}"
    if hint:
        message += f" (did you mean {hint!r}?)"
    logger.error(message)
    raise UnknownPresetError(message)


def preset_json(preset: Preset) -> str:
    """JSON accepted back by load_preset()."""
    return preset.model_dump_json(indent=2) + "\n"


def load_preset(path: Path) -> Preset:
    text = Path(path).read_text(encoding="utf-8")
    preset = Preset.model_validate_json(text)
    logger.info(f"Loaded preset {preset.name!r} from {path}")
    return preset
