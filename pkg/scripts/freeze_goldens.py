import json
import tempfile
from argparse import ArgumentParser
from pathlib import Path

import numpy as np

from curvforge.cli import EXIT_OK, main as cli_main
from curvforge.image_io import file_digest, write_gray, write_mask
from curvforge.maskgen import ChainMaskParams, RectMaskParams, random_chain_mask, random_rect_mask

# -----------------------------
#  pipeline
# -----------------------------

MASTER_SEED = 11
CURVE_COUNT = 4
PAIR_COUNT = 4

DEFAULT_OUT = Path(__file__).resolve().parents[1] / "tests" / "fixtures" / "golden_pipeline.json"


def _run(*argv: str) -> None:
    code = cli_main(list(argv))
    if code != EXIT_OK:
        raise RuntimeError(f"curvforge {' '.join(argv)} exited {code}")


def pipeline_digests(workdir: Path) -> dict[str, str]:
    """
    gen -> noisy-skel -> inpaint-mask -> augment-bg -> assemble -> eval (pred = gt),
    returning the SHA-256 of every produced file keyed by its path under workdir.
    """
    workdir = Path(workdir)
    curves, raw, bgs, pairs = (workdir / d for d in ("curves", "raw_bg", "bgs", "pairs"))

    #two fixed gray backgrounds
    write_gray(raw / "ramp.png", np.tile((np.arange(576) * 255 // 575).astype(np.uint8), (576, 1)))
    write_gray(raw / "flat.png", np.full((576, 576), 96, dtype=np.uint8))

    _run("gen", "--preset", "drive", "--count", str(CURVE_COUNT), "--seed", str(MASTER_SEED),
         "--out", str(curves), "--threads", "1")
    first = curves / "curves" / "curve_0000.png"
    _run("noisy-skel", "--in", str(first), "--seed", str(MASTER_SEED), "--out", str(workdir / "skel.png"))
    _run("inpaint-mask", "--in", str(workdir / "skel.png"), "--rects", "1", "--chains", "1",
         "--seed", str(MASTER_SEED), "--out", str(workdir / "inpaint.png"))
    _run("augment-bg", "--in", str(raw), "--out", str(bgs))
    _run("assemble", "--curves", str(curves), "--backgrounds", str(bgs),
         "--count", str(PAIR_COUNT), "--seed", str(MASTER_SEED), "--out", str(pairs))
    _run("eval", "--pred", str(curves / "curves"), "--gt", str(curves / "curves"),
         "--report", str(workdir / "report.json"), "--threads", "1")

    produced = sorted(p for p in workdir.rglob("*") if p.is_file() and raw not in p.parents)
    return {p.relative_to(workdir).as_posix(): file_digest(p) for p in produced}


def maskgen_digests(workdir: Path) -> dict[str, str]:
    """Fixed-seed rectangle and chain masks on a 256 x 256 canvas, digested like the pipeline outputs."""
    workdir = Path(workdir)
    rect = RectMaskParams(count_range=(1, 3), width_range=(20, 80), height_range=(20, 80), seed=7)
    chain = ChainMaskParams(chain_count_range=(2, 2), vertices_range=(6, 6), width_range=(8, 16), seed=11)
    write_mask(workdir / "maskgen" / "rects_seed7.png", random_rect_mask(256, 256, rect))
    write_mask(workdir / "maskgen" / "chains_seed11.png", random_chain_mask(256, 256, chain))
    return {
        p.relative_to(workdir).as_posix(): file_digest(p)
        for p in sorted((workdir / "maskgen").glob("*.png"))
    }


def golden_digests(workdir: Path) -> dict[str, str]:
    """Everything the golden test compares: the pipeline run plus the fixed-seed masks."""
    digests = {f"pipeline/{k}": v for k, v in pipeline_digests(Path(workdir) / "pipeline").items()}
    digests.update(maskgen_digests(workdir))
    return dict(sorted(digests.items()))


def main() -> None:
    parser = ArgumentParser(
        description="Run the reference pipeline and freeze its output digests"
    )

    parser.add_argument(
        "--out",
        type=Path,
        default=DEFAULT_OUT,
        help="Where to write the digest JSON (defaults to tests/fixtures)"
    )

    args = parser.parse_args()

    with tempfile.TemporaryDirectory() as tmp:
        digests = golden_digests(Path(tmp))

    args.out.parent.mkdir(parents=True, exist_ok=True)
    args.out.write_text(json.dumps(digests, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    print(f"Froze {len(digests)} digests into {args.out}")

if __name__ == "__main__":
    main()
