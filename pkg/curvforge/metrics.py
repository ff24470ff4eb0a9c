"""
Segmentation metrics and loss kernels.

Overlap metrics return fractions in [0, 1]; the evaluation report scales them x100.
Losses return (value, gradient w.r.t. each probability) with exact analytic gradients.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy import ndimage

from .curvmodels import EvalReport, ImageScores, ScoreSummary
from .logging_config import get_logger
from .raster import EmptyMaskError, Mask, check_same_shape, skeletonize

logger = get_logger(__name__)

__all__ = [
    "EmptyMaskError",
    "ConfusionCounts",
    "confusion",
    "dsc",
    "sensitivity",
    "specificity",
    "distance_transform",
    "surface",
    "assd",
    "cldice",
    "ce_loss_grad",
    "dice_loss_grad",
    "seg_loss",
    "final_loss",
    "info_nce",
    "patch_nce",
    "score_pair",
    "evaluate",
]

# -----------------------------
#  loss constants
# -----------------------------

PROB_EPS = 1e-7
DICE_SMOOTH = 1.0
SEG_CE_WEIGHT = 0.5
SEG_DICE_WEIGHT = 0.5
DEFAULT_LAMBDA_PSD = 1.0
DEFAULT_TAU = 0.07

REPORT_DECIMALS = 2

FOUR_NEIGHBOURS = ndimage.generate_binary_structure(2, 1)


# -----------------------------
#  overlap metrics
# -----------------------------

@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


def confusion(pred: Mask, gt: Mask) -> ConfusionCounts:
    check_same_shape(pred, gt)
    pred, gt = np.asarray(pred, dtype=bool), np.asarray(gt, dtype=bool)
    tp = int(np.count_nonzero(pred & gt))
    fp = int(np.count_nonzero(pred & ~gt))
    fn = int(np.count_nonzero(~pred & gt))
    return ConfusionCounts(tp=tp, fp=fp, tn=pred.size - tp - fp - fn, fn=fn)


def dsc(c: ConfusionCounts) -> float:
    """2tp / (2tp + fp + fn); 1 when both masks are empty."""
    denom = 2 * c.tp + c.fp + c.fn
    return 1.0 if denom == 0 else 2 * c.tp / denom


def sensitivity(c: ConfusionCounts) -> float:
    denom = c.tp + c.fn
    return 1.0 if denom == 0 else c.tp / denom


def specificity(c: ConfusionCounts) -> float:
    denom = c.tn + c.fp
    return 1.0 if denom == 0 else c.tn / denom


# -----------------------------
#  surface distance
# -----------------------------

def distance_transform(m: Mask) -> np.ndarray:
    """Exact Euclidean distance from every pixel to the nearest foreground pixel."""
    m = np.asarray(m, dtype=bool)
    if not m.any():
        raise EmptyMaskError("distance transform of an empty mask is undefined")
    return ndimage.distance_transform_edt(~m)


def surface(m: Mask) -> Mask:
    """Foreground pixels with a background 4-neighbour; off-canvas counts as background."""
    m = np.asarray(m, dtype=bool)
    return m & ~ndimage.binary_erosion(m, structure=FOUR_NEIGHBOURS, border_value=0)


def assd(pred: Mask, gt: Mask) -> float:
    """Average symmetric surface distance in pixels."""
    check_same_shape(pred, gt)
    if not np.any(pred) or not np.any(gt):
        raise EmptyMaskError("ASSD needs non-empty prediction and ground truth")

    s_pred, s_gt = surface(pred), surface(gt)
    to_gt = distance_transform(s_gt)[s_pred]
    to_pred = distance_transform(s_pred)[s_gt]
    return float((to_gt.sum() + to_pred.sum()) / (len(to_gt) + len(to_pred)))


def cldice(pred: Mask, gt: Mask) -> float:
    """Harmonic mean of skeleton precision and skeleton sensitivity; 0 if either skeleton is empty."""
    check_same_shape(pred, gt)
    pred, gt = np.asarray(pred, dtype=bool), np.asarray(gt, dtype=bool)
    skel_pred, skel_gt = skeletonize(pred), skeletonize(gt)

    n_pred, n_gt = np.count_nonzero(skel_pred), np.count_nonzero(skel_gt)
    if n_pred == 0 or n_gt == 0:
        return 0.0

    t_prec = np.count_nonzero(skel_pred & gt) / n_pred
    t_sens = np.count_nonzero(skel_gt & pred) / n_gt
    if t_prec + t_sens == 0:
        return 0.0
    return float(2 * t_prec * t_sens / (t_prec + t_sens))


# -----------------------------
#  segmentation losses
# -----------------------------

def _check_probs(probs: np.ndarray, gt: Mask) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    probs = np.asarray(probs, dtype=float)
    check_same_shape(probs, gt)
    if not np.all(np.isfinite(probs)):
        raise ValueError("probability map has non-finite values")
    if probs.min(initial=0.0) < 0.0 or probs.max(initial=0.0) > 1.0:
        raise ValueError("probabilities must lie in [0, 1]")

    clamped = np.clip(probs, PROB_EPS, 1.0 - PROB_EPS)
    #gradient of the clamp: zero where it is active
    live = (probs >= PROB_EPS) & (probs <= 1.0 - PROB_EPS)
    return clamped, np.asarray(gt, dtype=float), live


def ce_loss_grad(probs: np.ndarray, gt: Mask) -> tuple[float, np.ndarray]:
    """Mean binary cross-entropy."""
    p, g, live = _check_probs(probs, gt)
    loss = -np.mean(g * np.log(p) + (1.0 - g) * np.log(1.0 - p))
    grad = -(g / p - (1.0 - g) / (1.0 - p)) / p.size
    return float(loss), np.where(live, grad, 0.0)


def dice_loss_grad(probs: np.ndarray, gt: Mask, smooth: float = DICE_SMOOTH) -> tuple[float, np.ndarray]:
    """Soft Dice loss 1 - (2 sum(pg) + s) / (sum(p) + sum(g) + s)."""
    p, g, live = _check_probs(probs, gt)
    inter = float(np.sum(p * g))
    denom = float(np.sum(p) + np.sum(g)) + smooth
    numer = 2.0 * inter + smooth

    loss = 1.0 - numer / denom
    grad = -(2.0 * g * denom - numer) / (denom * denom)
    return float(loss), np.where(live, grad, 0.0)


def seg_loss(probs: np.ndarray, gt: Mask) -> tuple[float, np.ndarray]:
    ce, ce_grad = ce_loss_grad(probs, gt)
    dice, dice_grad = dice_loss_grad(probs, gt)
    return (
        SEG_CE_WEIGHT * ce + SEG_DICE_WEIGHT * dice,
        SEG_CE_WEIGHT * ce_grad + SEG_DICE_WEIGHT * dice_grad,
    )


def final_loss(seg: float, psd: float, lambda_psd: float = DEFAULT_LAMBDA_PSD) -> float:
    """Segmentation loss plus the weighted pseudo-label loss."""
    return seg + lambda_psd * psd


# -----------------------------
#  contrastive losses
# -----------------------------

def info_nce(
    v: np.ndarray,
    v_plus: np.ndarray,
    negatives: Sequence[np.ndarray],
    tau: float = DEFAULT_TAU,
) -> float:
    """
    Softmax cross-entropy of the positive pair against N negatives at temperature tau.

    Negative logits are sorted and summed with math.fsum, so any permutation of the
    negatives gives the same bits.
    """
    if tau <= 0:
        raise ValueError(f"tau must be > 0, got {tau}")
    if len(negatives) == 0:
        raise ValueError("info_nce needs at least one negative")

    v = np.asarray(v, dtype=float).ravel()
    v_plus = np.asarray(v_plus, dtype=float).ravel()
    negs = [np.asarray(n, dtype=float).ravel() for n in negatives]
    for w in (v_plus, *negs):
        if w.shape != v.shape:
            raise ValueError(f"feature length mismatch: {w.shape[0]} vs {v.shape[0]}")
    if not all(np.all(np.isfinite(w)) for w in (v, v_plus, *negs)):
        raise ValueError("features must be finite")

    pos = float(np.dot(v, v_plus)) / tau
    neg = sorted(float(np.dot(v, n)) / tau for n in negs)

    top = max(pos, neg[-1])
    total = math.fsum(math.exp(x - top) for x in [pos, *neg])
    return max(0.0, math.log(total) + (top - pos))


def patch_nce(queries: np.ndarray, keys: np.ndarray, tau: float = DEFAULT_TAU) -> float:
    """Mean InfoNCE over patches: key i is query i's positive, every other key a negative."""
    queries = np.asarray(queries, dtype=float)
    keys = np.asarray(keys, dtype=float)
    if queries.ndim != 2 or queries.shape != keys.shape:
        raise ValueError(f"queries and keys must be matching (P, D) arrays, got {queries.shape} and {keys.shape}")
    if len(queries) < 2:
        raise ValueError("patch_nce needs at least two patches")

    losses = [
        info_nce(q, keys[i], [keys[j] for j in range(len(keys)) if j != i], tau)
        for i, q in enumerate(queries)
    ]
    return math.fsum(losses) / len(losses)


# -----------------------------
#  evaluation report
# -----------------------------

SCORE_FIELDS = ("dsc", "assd", "se", "sp", "cldice")


def score_pair(pred: Mask, gt: Mask) -> dict[str, float | None]:
    """Raw scores for one pair; overlap metrics as fractions, assd None when undefined."""
    counts = confusion(pred, gt)
    try:
        distance = assd(pred, gt)
    except EmptyMaskError:
        distance = None
    return {
        "dsc": dsc(counts),
        "assd": distance,
        "se": sensitivity(counts),
        "sp": specificity(counts),
        "cldice": cldice(pred, gt),
    }


def _scaled(raw: dict[str, float | None]) -> dict[str, float | None]:
    return {k: (v if k == "assd" or v is None else 100.0 * v) for k, v in raw.items()}


def _round(x: float | None) -> float | None:
    return None if x is None else round(float(x), REPORT_DECIMALS)


def _summaries(rows: list[dict[str, float | None]]) -> tuple[ScoreSummary, ScoreSummary]:
    mean, std = {}, {}
    for key in SCORE_FIELDS:
        values = np.array([r[key] for r in rows if r[key] is not None], dtype=float)
        if len(values) == 0:
            mean[key] = std[key] = None
            continue
        mean[key] = _round(values.mean())
        std[key] = _round(values.std(ddof=0))
    return ScoreSummary(**mean), ScoreSummary(**std)


def evaluate(pairs: Iterable[tuple[str, Mask, Mask]], threads: int = 1) -> EvalReport:
    """Score (id, pred, gt) triples into a report with per-image rows plus mean and std."""
    pairs = list(pairs)

    def run(item: tuple[str, Mask, Mask]) -> dict[str, float | None]:
        name, pred, gt = item
        raw = score_pair(pred, gt)
        if raw["assd"] is None:
            logger.warning(f"ASSD undefined for {name}: empty prediction or ground truth")
        return _scaled(raw)

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        rows = list(pool.map(run, pairs))

    images = [
        ImageScores(id=name, **{k: _round(v) for k, v in row.items()})
        for (name, _, _), row in zip(pairs, rows)
    ]
    mean, std = _summaries(rows)
    report = EvalReport(images=images, mean=mean, std=std, count=len(images))
    logger.info(f"Evaluated {report.count} pairs: mean DSC {mean.dsc}, mean ASSD {mean.assd}")
    return report
