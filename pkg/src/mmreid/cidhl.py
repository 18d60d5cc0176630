"""Batch-hard triplet loss and the cross-identity discrimination harmonization
loss (CIDHL), with closed-form subgradients.

All distances are Euclidean norms of differences. Hinges are
``max(0, x)``; a term counts as active only when its argument is strictly
positive, and a clamped term contributes nothing to the gradient. Ties in
hardest-positive / hardest-negative selection go to the first candidate in
canonical batch order.
"""
from dataclasses import dataclass

import numpy as np

from .core import LossConfig, MiniBatch
from .errors import ConfigError, KinkError


@dataclass(frozen=True)
class ModalityCenters:
    visible: np.ndarray
    infrared: np.ndarray

    @property
    def stacked(self):
        """``(P, 2, D)`` array, modality axis ordered visible, infrared."""
        return np.stack([self.visible, self.infrared], axis=1)


@dataclass(frozen=True)
class LossReport:
    """Loss values and the gradient w.r.t. every feature of the batch.

    ``gradient`` rows follow the batch's canonical record order.
    ``mean_per_anchor`` divides the reported total by the anchor count
    (2*P*K samples for the triplet loss, 2*P modality centers for CIDHL).
    """

    l_cid: float
    l_dh: float
    l_cidhl: float
    l_th: float
    active_terms: int
    gradient: np.ndarray
    mean_per_anchor: float
    config: LossConfig
    kind: str = "cidhl"

    @property
    def total(self):
        return self.l_th if self.kind == "triplet" else self.l_cidhl


def _norm(x):
    return np.sqrt(np.sum(x * x, axis=-1))


def _unit(diff, dist):
    # zero subgradient where the distance vanishes
    safe = np.where(dist > 0, dist, 1.0)
    return np.where((dist > 0)[..., None], diff / safe[..., None], 0.0)


def _centers(F):
    K = F.shape[-2]
    acc = F[..., 0, :].copy()
    for k in range(1, K):
        acc += F[..., k, :]
    return acc / K


def compute_centers(batch):
    C = _centers(batch.blocks())
    return ModalityCenters(C[:, 0].copy(), C[:, 1].copy())


def _require_negatives(batch):
    if batch.P < 2:
        raise ConfigError("no negative available: the batch holds a single identity")


def _cidhl_terms(F, margin):
    """Per-term hinge arguments and selections; works on ``(..., P, 2, K, D)``."""
    P = F.shape[-4]
    C = _centers(F)
    Cf = C.reshape(C.shape[:-3] + (2 * P, C.shape[-1]))
    Dc = _norm(Cf[..., :, None, :] - Cf[..., None, :, :])
    owner = np.repeat(np.arange(P), 2)
    n = np.arange(2 * P)
    partner = n ^ 1
    pos = Dc[..., n, partner]
    masked = np.where(owner[:, None] == owner[None, :], np.inf, Dc)
    neg_idx = np.argmin(masked, axis=-1)
    neg = np.take_along_axis(masked, neg_idx[..., None], axis=-1)[..., 0]
    cid_arg = margin + pos - neg

    # center-to-sample distances: own modality (spread) and other modality
    d_own = _norm(C[..., :, :, None, :] - F)
    d_other = _norm(C[..., :, :, None, :] - F[..., :, ::-1, :, :])
    jp = np.argmax(d_own, axis=-1)
    jn = np.argmin(d_other, axis=-1)
    spread = np.take_along_axis(d_own, jp[..., None], axis=-1)[..., 0]
    gap = np.take_along_axis(d_other, jn[..., None], axis=-1)[..., 0]
    dh_arg = margin + spread - gap
    return dict(C=C, Cf=Cf, Dc=Dc, masked=masked, pos=pos, neg=neg, neg_idx=neg_idx,
                cid_arg=cid_arg, d_own=d_own, d_other=d_other, jp=jp, jn=jn,
                spread=spread, gap=gap, dh_arg=dh_arg)


def _cidhl_values(F, margin, delta):
    t = _cidhl_terms(F, margin)
    l_cid = np.maximum(t["cid_arg"], 0.0).sum(axis=-1)
    l_dh = np.maximum(t["dh_arg"], 0.0).reshape(t["dh_arg"].shape[:-2] + (-1,)).sum(axis=-1)
    return l_cid, l_dh, l_cid + delta * l_dh


def cidhl_loss(batch, cfg=None):
    """CIDHL value, per-part breakdown and subgradient for one mini-batch."""
    cfg = cfg or LossConfig()
    _require_negatives(batch)
    F = batch.blocks()
    P, _, K, D = F.shape
    t = _cidhl_terms(F, cfg.margin)
    cid_on = t["cid_arg"] > 0
    dh_on = t["dh_arg"] > 0
    l_cid = float(np.maximum(t["cid_arg"], 0.0).sum())
    l_dh = float(np.maximum(t["dh_arg"], 0.0).sum())
    l_cidhl = l_cid + cfg.delta * l_dh

    Cf = t["Cf"]
    n = np.arange(2 * P)
    gC = np.zeros_like(Cf)
    u_pos = _unit(Cf - Cf[n ^ 1], t["pos"])
    u_neg = _unit(Cf - Cf[t["neg_idx"]], t["neg"])
    w = cid_on[:, None].astype(np.float64)
    gC += w * (u_pos - u_neg)
    np.add.at(gC, n ^ 1, -w * u_pos)
    np.add.at(gC, t["neg_idx"], w * u_neg)
    gC = gC.reshape(P, 2, D)

    gF = np.zeros_like(F)
    C = t["C"]
    ii, aa = np.meshgrid(np.arange(P), np.arange(2), indexing="ij")
    own = F[ii, aa, t["jp"]]
    other = F[ii, 1 - aa, t["jn"]]
    u1 = _unit(C - own, t["spread"])
    u2 = _unit(C - other, t["gap"])
    w = cfg.delta * dh_on[..., None].astype(np.float64)
    gC += w * (u1 - u2)
    np.add.at(gF, (ii, aa, t["jp"]), -w * u1)
    np.add.at(gF, (ii, 1 - aa, t["jn"]), w * u2)

    # each center is the mean of its K samples
    gF += gC[:, :, None, :] / K
    return LossReport(
        l_cid=l_cid, l_dh=l_dh, l_cidhl=l_cidhl, l_th=0.0,
        active_terms=int(cid_on.sum() + dh_on.sum()),
        gradient=gF.reshape(2 * P * K, D),
        mean_per_anchor=l_cidhl / (2 * P),
        config=cfg,
    )


def cidhl_gradient(batch, cfg=None):
    return cidhl_loss(batch, cfg).gradient


def triplet_hard_loss(batch, cfg=None):
    """Batch-hard triplet loss summed over every record as anchor.

    Positives and negatives are chosen by identity only; modality is ignored.
    """
    cfg = cfg or LossConfig()
    _require_negatives(batch)
    X = batch.features
    ids = batch.set.identities
    N = X.shape[0]
    dist = _norm(X[:, None, :] - X[None, :, :])
    same = ids[:, None] == ids[None, :]
    p_idx = np.argmax(np.where(same, dist, -np.inf), axis=1)
    n_idx = np.argmin(np.where(same, np.inf, dist), axis=1)
    rows = np.arange(N)
    d_pos = dist[rows, p_idx]
    d_neg = dist[rows, n_idx]
    arg = cfg.margin + d_pos - d_neg
    on = arg > 0
    l_th = float(np.maximum(arg, 0.0).sum())

    w = on[:, None].astype(np.float64)
    u_p = _unit(X - X[p_idx], d_pos)
    u_n = _unit(X - X[n_idx], d_neg)
    grad = w * (u_p - u_n)
    np.add.at(grad, p_idx, -w * u_p)
    np.add.at(grad, n_idx, w * u_n)
    return LossReport(l_cid=0.0, l_dh=0.0, l_cidhl=0.0, l_th=l_th, active_terms=int(on.sum()),
                      gradient=grad, mean_per_anchor=l_th / N, config=cfg, kind="triplet")


# one-sided slopes of a smooth loss differ by about step * curvature
KINK_SLOPE_JUMP = 1e-4


def _second_gap(values, largest):
    """Distance between the selected extreme and the runner-up along the last axis."""
    s = np.sort(values, axis=-1)
    if s.shape[-1] < 2:
        return np.full(s.shape[:-1], np.inf)
    if largest:
        return s[..., -1] - s[..., -2]
    return s[..., 1] - s[..., 0]


def kink_margin(batch, cfg=None):
    """Smallest distance of the batch to a point where CIDHL is not differentiable.

    Considers hinge arguments near zero, near-ties in the hardest-sample and
    nearest-center selections of active terms, and vanishing distances inside
    active terms. Perturbing a single coordinate by ``h`` moves every
    distance by at most ``h``.
    """
    cfg = cfg or LossConfig()
    t = _cidhl_terms(batch.blocks(), cfg.margin)
    margins = [np.abs(t["cid_arg"]).min()]
    on = t["cid_arg"] > 0
    if on.any():
        # the two own-identity entries are +inf and sort last
        candidates = np.sort(t["masked"], axis=-1)[..., :-2]
        margins.append(_second_gap(candidates, largest=False)[on].min())
        margins.append(t["pos"][on].min())
        margins.append(t["neg"][on].min())
    if cfg.delta > 0:
        margins.append(np.abs(t["dh_arg"]).min())
        on = t["dh_arg"] > 0
        if on.any():
            margins.append(_second_gap(t["d_own"], largest=True)[on].min())
            margins.append(_second_gap(t["d_other"], largest=False)[on].min())
            margins.append(t["spread"][on].min())
            margins.append(t["gap"][on].min())
    return float(min(margins))


def finite_difference_check(batch, cfg=None, step=1e-6):
    """Max over coordinates of ``|analytic - central| / max(1, |central|)``.

    Batches whose kink margin is below ``10 * step`` are screened with
    one-sided differences; a slope jump across any coordinate raises
    :class:`KinkError`. Structural ties (e.g. the two samples of a K=2
    block are always equidistant from their center) pass the screen.
    """
    cfg = cfg or LossConfig()
    if not step > 0:
        raise ConfigError("finite-difference step must be positive")
    _require_negatives(batch)
    analytic = cidhl_loss(batch, cfg).gradient.reshape(-1)
    F = batch.blocks()
    n = F.size
    stack = np.broadcast_to(F, (3, n) + F.shape).copy()
    flat = stack.reshape(3, n, n)
    idx = np.arange(n)
    flat[0, idx, idx] += step
    flat[1, idx, idx] -= step
    _, _, total = _cidhl_values(stack, cfg.margin, cfg.delta)
    central = (total[0] - total[1]) / (2 * step)
    scale = np.maximum(1.0, np.abs(central))
    margin = kink_margin(batch, cfg)
    if margin < 10 * step:
        jump = np.abs((total[0] - total[2]) - (total[2] - total[1])) / step / scale
        if jump.max() > KINK_SLOPE_JUMP:
            raise KinkError(f"batch lies within {margin:.3g} of a non-differentiable point "
                            f"(need >= {10 * step:.3g}); re-randomize the batch")
    return float(np.max(np.abs(analytic - central) / scale))
