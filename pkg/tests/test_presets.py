import json
from pathlib import Path

import pytest
from pydantic import ValidationError

from curvforge.curvmodels import CropOp, Preset, UnionOp
from curvforge.presets import (
    UnknownPresetError,
    get_preset,
    load_preset,
    preset_json,
    preset_names,
    suggest_preset,
)

FIXTURE = Path(__file__).parent / "fixtures" / "preset_growth_params.json"

EXPECTED = json.loads(FIXTURE.read_text())

# -----------------------------
#  built-in values
# -----------------------------

def test_preset_names():
    """Test the four built-ins in their listing order"""
    assert preset_names() == ["octa500", "corn", "drive", "chasedb1"]

@pytest.mark.parametrize("name", sorted(EXPECTED))
def test_builtin_growth_parameters(name):
    """Test each built-in against the per-dataset growth table"""
    expected = EXPECTED[name]
    preset = get_preset(name)

    assert preset.name == name
    assert list(preset.canvas) == expected["canvas"]
    assert len(preset.growth) == expected["components"]
    for g in preset.growth:
        assert g.attractor_grid == expected["attractor_grid"]
        assert g.jitter == expected["jitter"]
        assert g.attraction_distance == expected["attraction_distance"]
        assert g.kill_distance == expected["kill_distance"]
        assert g.segment_length == expected["segment_length"]
        assert g.murray_exponent == 3.0

def test_output_sizes():
    """Test the post-recipe mask sizes"""
    assert get_preset("corn").output_size() == (384, 384)
    assert get_preset("drive").output_size() == (576, 576)
    assert get_preset("chasedb1").output_size() == (960, 960)
    assert get_preset("octa500").output_size() == (900, 900)

def test_octa_recipe_unions_two_components():
    """Test that the two-component preset crops then unions"""
    preset = get_preset("octa500")
    assert [type(op) for op in preset.post_ops] == [CropOp, UnionOp]
    assert preset.growth[0].seed != preset.growth[1].seed

def test_presets_are_fresh_copies():
    """Test that each lookup builds an equal but independent preset"""
    a, b = get_preset("drive"), get_preset("drive")
    assert a == b
    assert a is not b

# -----------------------------
#  lookup errors
# -----------------------------

def test_unknown_preset_suggests_close_name():
    """Test that a typo raises with a did-you-mean hint"""
    with pytest.raises(UnknownPresetError, match="did you mean 'drive'"):
        get_preset("drvie")

def test_unknown_preset_without_suggestion():
    """Test that a far-off name raises without a hint"""
    with pytest.raises(UnknownPresetError) as exc:
        get_preset("zzzzzzzz")
    assert "did you mean" not in str(exc.value)

def test_lookup_is_case_insensitive():
    """Test that names are matched after trimming and lower-casing"""
    assert get_preset("  CHASEDB1 ").name == "chasedb1"

def test_suggest_preset():
    """Test fuzzy suggestions"""
    assert suggest_preset("octa") == "octa500"
    assert suggest_preset("chase") == "chasedb1"
    assert suggest_preset("qqqqqq") is None

# -----------------------------
#  json round trip
# -----------------------------

def test_preset_json_round_trip(tmp_path):
    """Test that printed presets load back to equal models"""
    for name in preset_names():
        path = tmp_path / f"{name}.json"
        path.write_text(preset_json(get_preset(name)))
        assert load_preset(path) == get_preset(name)

def test_preset_json_rejects_unknown_fields():
    """Test that extra keys are refused"""
    data = json.loads(preset_json(get_preset("corn")))
    data["colour"] = "red"
    with pytest.raises(ValidationError):
        Preset.model_validate(data)

def test_multi_component_needs_union():
    """Test that two components without a union step are refused"""
    data = json.loads(preset_json(get_preset("octa500")))
    data["post_ops"] = [{"op": "crop"}]
    with pytest.raises(ValidationError, match="union"):
        Preset.model_validate(data)

def test_fov_op_needs_fov_region():
    """Test that an fov step without a region is refused"""
    data = json.loads(preset_json(get_preset("drive")))
    data["fov"] = None
    with pytest.raises(ValidationError, match="fov"):
        Preset.model_validate(data)
