"""
PNG persistence for masks and gray images.

Masks are stored as 8-bit single-channel PNGs (foreground 255, background 0). Colour inputs
are converted to gray on load with PIL's "L" conversion, i.e. the Rec.601 luma weights
L = 0.299 R + 0.587 G + 0.114 B.
"""

import hashlib
import os
import tempfile
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .logging_config import get_logger

logger = get_logger(__name__)

IMAGE_SUFFIXES = {".png", ".jpg", ".jpeg", ".tif", ".tiff", ".bmp", ".gif"}

MASK_THRESHOLD = 128


def read_gray(path: Path) -> np.ndarray:
    try:
        with Image.open(path) as img:
            return np.asarray(img.convert("L"), dtype=np.uint8).copy()
    except UnidentifiedImageError as e:
        logger.error(f"Not an image: {path}")
        raise ValueError(f"{path} is not a readable image") from e


def read_mask(path: Path) -> np.ndarray:
    return read_gray(path) >= MASK_THRESHOLD


def _atomic_png(path: Path, data: np.ndarray) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)

    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.stem}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            Image.fromarray(data).save(fh, format="PNG")
        os.replace(tmp, path)
    except OSError:
        logger.error(f"Failed writing {path}")
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_mask(path: Path, mask: np.ndarray) -> None:
    _atomic_png(path, np.where(mask, 255, 0).astype(np.uint8))


def write_gray(path: Path, img: np.ndarray) -> None:
    _atomic_png(path, np.asarray(img, dtype=np.uint8))


def list_images(folder: Path) -> list[Path]:
    """Image files directly inside `folder`, sorted by name."""
    folder = Path(folder)
    if not folder.is_dir():
        raise FileNotFoundError(f"not a directory: {folder}")
    return sorted(p for p in folder.iterdir() if p.is_file() and p.suffix.lower() in IMAGE_SUFFIXES)


def file_digest(path: Path) -> str:
    """SHA-256 hex digest of a file's bytes."""
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_text_atomic(path: Path, text: str) -> None:
    """UTF-8 text written via temp file + rename, so readers never see a partial file."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)

    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.stem}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except OSError:
        logger.error(f"Failed writing {path}")
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
