import numpy as np
import pytest
from pydantic import ValidationError

from curvforge.bank import (
    ManifestError,
    assemble_pairs,
    augment_backgrounds,
    background_variants,
    build_curve_bank,
    histogram,
    histogram_l1,
    preset_hash,
    preview_composite,
    read_manifest,
    render_curve,
    validate_bank,
    write_manifest,
    write_paired_bank,
)
from curvforge.curvmodels import BankEntry, BankManifest, BankPair, FlipOp, MorphOp, Preset, UnionOp
from curvforge.image_io import file_digest, read_gray, read_mask
from curvforge.presets import get_preset
from curvforge.raster import EmptyMaskError, MaskShapeError, circle_mask

from tests.conftest import make_dense_config

# -----------------------------
#  fixtures
# -----------------------------

@pytest.fixture
def dense_preset():
    """Branching single-component preset on a 200 px canvas"""
    return Preset(
        name="custom",
        growth=[make_dense_config(max_nodes=200)],
        frame=(200, 200),
        canvas=(200, 200),
        post_ops=[MorphOp(op="dilate", size=1), FlipOp(axis="vertical")],
    )


@pytest.fixture
def background_images():
    """Two synthetic gray backgrounds"""
    ramp = np.tile(np.arange(0, 200, dtype=np.uint8), (200, 1))
    noise = np.random.default_rng(5).integers(40, 200, size=(200, 200)).astype(np.uint8)
    return {"ramp": ramp, "noise": noise}


def entry(entry_id: str, kind: str = "curve") -> BankEntry:
    return BankEntry(id=entry_id, path=f"x/{entry_id}.png", kind=kind, seed=0, config_hash="h", preset="custom")

# -----------------------------
#  curve rendering
# -----------------------------

def test_render_drive_curve_inside_fov():
    """Test that DRIVE curves are 576x576 with nothing outside the field of view"""
    preset = get_preset("drive")
    fov = circle_mask(576, 576, preset.fov)
    for seed in range(5):
        mask = render_curve(preset, seed)
        assert mask.shape == (576, 576)
        assert mask.any()
        assert not (mask & ~fov).any()

def test_render_corn_curve_is_cropped():
    """Test that CORN curves come out at the 384 px crop size"""
    assert render_curve(get_preset("corn"), 3).shape == (384, 384)

def test_render_chasedb1_and_octa500_sizes():
    """Test the CHASEDB1 and OCTA500 canvas sizes"""
    assert render_curve(get_preset("chasedb1"), 1).shape == (960, 960)
    assert render_curve(get_preset("octa500"), 1).shape == (900, 900)

def test_render_curve_is_deterministic(dense_preset):
    """Test that a curve is a pure function of preset and item seed"""
    a = render_curve(dense_preset, 42)
    assert np.array_equal(a, render_curve(dense_preset, 42))
    assert not np.array_equal(a, render_curve(dense_preset, 43))

def test_render_curve_union_of_components(dense_preset):
    """Test that a two-component preset draws both trees"""
    single = dense_preset.model_copy(update={"post_ops": []})
    double = Preset(
        name="custom",
        growth=[single.growth[0], single.growth[0]],
        frame=(200, 200),
        canvas=(200, 200),
        post_ops=[UnionOp()],
    )
    mask = render_curve(double, 8)
    first = render_curve(single, 8)

    #component 0 of both presets grows from the same derived seed
    assert mask.shape == (200, 200)
    assert not (first & ~mask).any()
    assert mask.sum() > first.sum()

# -----------------------------
#  curve bank
# -----------------------------

def test_build_curve_bank_layout(tmp_path, dense_preset):
    """Test entries, files and manifest of a small bank"""
    manifest = build_curve_bank(dense_preset, 3, master_seed=1, out_dir=tmp_path)

    curves = manifest.by_kind("curve")
    assert [e.id for e in curves] == ["curve-0000", "curve-0001", "curve-0002"]
    assert [e.path for e in curves] == [f"curves/curve_{i:04d}.png" for i in range(3)]
    assert all(e.config_hash == preset_hash(dense_preset) for e in curves)
    assert len({e.seed for e in curves}) == 3

    assert read_manifest(tmp_path) == manifest
    assert validate_bank(tmp_path) == manifest
    assert read_mask(tmp_path / curves[0].path).shape == (200, 200)

def test_build_curve_bank_singleton(tmp_path, dense_preset):
    """Test that count 1 yields one curve"""
    manifest = build_curve_bank(dense_preset, 1, master_seed=0, out_dir=tmp_path)
    assert len(manifest.by_kind("curve")) == 1

def test_build_curve_bank_rejects_zero(tmp_path, dense_preset):
    """Test that an empty bank request is refused"""
    with pytest.raises(ValueError):
        build_curve_bank(dense_preset, 0, master_seed=0, out_dir=tmp_path)

def test_build_curve_bank_is_byte_identical(tmp_path, dense_preset):
    """Test that reruns and thread counts give identical files"""
    a = build_curve_bank(dense_preset, 4, master_seed=9, out_dir=tmp_path / "a", threads=1)
    build_curve_bank(dense_preset, 4, master_seed=9, out_dir=tmp_path / "b", threads=3)

    for e in a.entries:
        assert file_digest(tmp_path / "a" / e.path) == file_digest(tmp_path / "b" / e.path)
    assert file_digest(tmp_path / "a/manifest.json") == file_digest(tmp_path / "b/manifest.json")

def test_build_drive_bank_stores_fov(tmp_path):
    """Test that presets with a field of view also store the fov mask"""
    manifest = build_curve_bank(get_preset("drive"), 2, master_seed=1, out_dir=tmp_path)

    (fov,) = manifest.by_kind("fov")
    assert fov.path == "masks/fov.png"
    fov_mask = read_mask(tmp_path / fov.path)
    for e in manifest.by_kind("curve"):
        assert not (read_mask(tmp_path / e.path) & ~fov_mask).any()

def test_build_drive_bank_negative_master_seed(tmp_path):
    """Test that a negative master seed is folded into 64 bits for every entry"""
    manifest = build_curve_bank(get_preset("drive"), 1, master_seed=-1, out_dir=tmp_path)

    (fov,) = manifest.by_kind("fov")
    assert fov.seed == (1 << 64) - 1
    assert all(0 <= e.seed < 1 << 64 for e in manifest.entries)

def test_validate_bank_missing_file(tmp_path, dense_preset):
    """Test that a deleted curve file fails validation"""
    manifest = build_curve_bank(dense_preset, 2, master_seed=1, out_dir=tmp_path)
    (tmp_path / manifest.entries[1].path).unlink()

    with pytest.raises(ManifestError, match="missing"):
        validate_bank(tmp_path)

# -----------------------------
#  manifest model
# -----------------------------

def test_manifest_round_trip(tmp_path):
    """Test that a written manifest parses back unchanged"""
    manifest = BankManifest(
        preset="custom",
        entries=[entry("c0"), entry("b0", "background")],
        pairs=[BankPair(curve_id="c0", background_id="b0", pair_id="pair-0000")],
    )
    write_manifest(tmp_path, manifest)
    assert read_manifest(tmp_path) == manifest
    assert '"version": 1' in (tmp_path / "manifest.json").read_text()

def test_manifest_referential_integrity():
    """Test duplicate ids, duplicate pair ids and dangling references"""
    with pytest.raises(ValidationError, match="duplicate entry ids"):
        BankManifest(preset="custom", entries=[entry("c0"), entry("c0")])

    with pytest.raises(ValidationError, match="missing entry"):
        BankManifest(
            preset="custom",
            entries=[entry("c0")],
            pairs=[BankPair(curve_id="c0", background_id="nope", pair_id="p")],
        )

    with pytest.raises(ValidationError, match="duplicate pair ids"):
        BankManifest(
            preset="custom",
            entries=[entry("c0"), entry("b0", "background")],
            pairs=[BankPair(curve_id="c0", background_id="b0", pair_id="p")] * 2,
        )

def test_manifest_rejects_absolute_paths():
    """Test that entry paths must stay inside the bank"""
    with pytest.raises(ValidationError):
        BankEntry(id="x", path="/etc/x.png", kind="curve", seed=0, config_hash="h", preset="custom")
    with pytest.raises(ValidationError):
        BankEntry(id="x", path="../x.png", kind="curve", seed=0, config_hash="h", preset="custom")

# -----------------------------
#  backgrounds
# -----------------------------

def test_augment_backgrounds_counts(tmp_path, background_images):
    """Test variant counts for flips x rotations"""
    one = {"ramp": background_images["ramp"]}

    m = augment_backgrounds(one, tmp_path / "a", flips=["horizontal", "vertical"], rotations=[0, 90])
    assert len(m.entries) == 6
    assert len({e.id for e in m.entries}) == 6

    assert len(augment_backgrounds(one, tmp_path / "b", rotations=[]).entries) == 3
    assert len(augment_backgrounds(one, tmp_path / "c", flips=[], rotations=[]).entries) == 1

    both = augment_backgrounds(background_images, tmp_path / "d")
    assert len(both.entries) == 2 * 3 * 4
    assert validate_bank(tmp_path / "d") == both

def test_augment_backgrounds_pixels(tmp_path, background_images):
    """Test that identity, flip and quarter-turn variants hold the expected pixels"""
    ramp = background_images["ramp"]
    m = augment_backgrounds({"ramp": ramp}, tmp_path, flips=["horizontal"], rotations=[0, 90])

    by_id = {e.id: read_gray(tmp_path / e.path) for e in m.entries}
    assert np.array_equal(by_id["bg-ramp-r0-id"], ramp)
    assert np.array_equal(by_id["bg-ramp-r0-horizontal"], ramp[:, ::-1])
    assert np.array_equal(by_id["bg-ramp-r90-id"], np.rot90(ramp))

def test_background_variants_empty_input(tmp_path):
    """Test that no inputs is an error and variants of one image are ordered"""
    with pytest.raises(ValueError):
        augment_backgrounds({}, tmp_path)

    img = np.zeros((4, 4), dtype=np.uint8)
    suffixes = [s for s, _ in background_variants(img, ["vertical"], [0, 30])]
    assert suffixes == ["r0-id", "r0-vertical", "r30-id", "r30-vertical"]

# -----------------------------
#  pairing
# -----------------------------

@pytest.fixture
def banks():
    """In-memory curve and background manifests"""
    curves = BankManifest(preset="custom", entries=[entry(f"curve-{i:04d}") for i in range(60)])
    backgrounds = BankManifest(
        preset="background", entries=[entry(f"bg-{i}", "background") for i in range(20)]
    )
    return curves, backgrounds

def test_assemble_pairs_forced_single_choice():
    """Test that 1x1 banks yield identical pairs"""
    curves = BankManifest(preset="custom", entries=[entry("c")])
    backgrounds = BankManifest(preset="bg", entries=[entry("b", "background")])
    m = assemble_pairs(curves, backgrounds, 3, seed=0)

    assert [(p.curve_id, p.background_id) for p in m.pairs] == [("c", "b")] * 3
    assert [p.pair_id for p in m.pairs] == ["pair-0000", "pair-0001", "pair-0002"]

def test_assemble_pairs_seeded(banks):
    """Test determinism, spread and the zero-count case"""
    curves, backgrounds = banks
    a = assemble_pairs(curves, backgrounds, 60, seed=4)
    assert a == assemble_pairs(curves, backgrounds, 60, seed=4)
    assert a.pairs != assemble_pairs(curves, backgrounds, 60, seed=5).pairs
    assert len({p.curve_id for p in a.pairs}) > 20

    assert assemble_pairs(curves, backgrounds, 0, seed=4).pairs == []

def test_assemble_pairs_empty_bank(banks):
    """Test that an empty bank cannot be paired"""
    curves, _ = banks
    with pytest.raises(ManifestError):
        assemble_pairs(curves, BankManifest(preset="bg"), 3, seed=0)

def test_write_paired_bank(tmp_path, dense_preset, background_images):
    """Test that the paired bank is self-contained and valid"""
    curves = build_curve_bank(dense_preset, 2, master_seed=3, out_dir=tmp_path / "curves_bank")
    backgrounds = augment_backgrounds(background_images, tmp_path / "bg_bank", rotations=[])
    manifest = assemble_pairs(curves, backgrounds, 5, seed=1)

    path = write_paired_bank(manifest, tmp_path / "curves_bank", tmp_path / "bg_bank", tmp_path / "pairs")
    assert path == tmp_path / "pairs/manifest.json"
    assert validate_bank(tmp_path / "pairs") == manifest

# -----------------------------
#  composite and histograms
# -----------------------------

def test_preview_composite():
    """Test zero offset, plain shift and clamping"""
    bg = np.full((5, 5), 128, dtype=np.uint8)
    curve = np.zeros((5, 5), dtype=bool)
    curve[2, :] = True

    assert np.array_equal(preview_composite(bg, curve, 0), bg)
    assert (preview_composite(bg, curve, -60)[2] == 68).all()
    out = preview_composite(bg, curve, 200)
    assert (out[2] == 255).all() and (out[0] == 128).all()

    with pytest.raises(MaskShapeError):
        preview_composite(bg, np.zeros((4, 5), dtype=bool), 10)

def test_histogram_distances(mask_rng):
    """Test self distance, disjoint mass and a brute-force recount"""
    a = mask_rng.integers(0, 256, size=(16, 16)).astype(np.uint8)
    b = mask_rng.integers(0, 256, size=(9, 30)).astype(np.uint8)

    ha, hb = histogram([a]), histogram([b])
    assert ha.total == a.size and ha.bins.sum() == ha.total
    assert histogram_l1(ha, ha) == 0.0

    zeros = histogram([np.zeros((3, 3), dtype=np.uint8)])
    full = histogram([np.full((2, 2), 255, dtype=np.uint8)])
    assert histogram_l1(zeros, full) == pytest.approx(2.0)

    brute = sum(abs((a == v).sum() / a.size - (b == v).sum() / b.size) for v in range(256))
    assert histogram_l1(ha, hb) == pytest.approx(brute, abs=1e-12)

def test_histogram_empty():
    """Test that distance on zero pixels raises"""
    with pytest.raises(EmptyMaskError):
        histogram_l1(histogram([]), histogram([np.zeros((2, 2), dtype=np.uint8)]))
