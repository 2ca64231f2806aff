"""Two-dimensional Gaussian mixtures for substation positions.

Fits full-covariance mixtures by expectation-maximisation, picks the number
of components by BIC, and draws new node positions from a fitted model.
A fitted :class:`GmmModel` can be saved to JSON and reused without the
original data.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .geo import GeoPoint

log = logging.getLogger(__name__)

MODEL_VERSION = 1
LOG_2PI = math.log(2.0 * math.pi)


class DegenerateDataError(ValueError):
    pass


def _logsumexp_rows(a: np.ndarray) -> np.ndarray:
    top = a.max(axis=1, keepdims=True)
    return top + np.log(np.exp(a - top).sum(axis=1, keepdims=True))


@dataclass(frozen=True)
class EmConfig:
    max_iters: int = 500
    rel_tol: float = 1e-6
    restarts: int = 5
    # covariance ridge (km^2); None means 1e-6 x mean coordinate variance
    cov_floor: Optional[float] = None

    def __post_init__(self):
        if self.max_iters < 1 or self.restarts < 1 or not self.rel_tol > 0:
            raise ValueError("EmConfig fields must be positive")
        if self.cov_floor is not None and not self.cov_floor > 0:
            raise ValueError("cov_floor must be positive")

    def ridge(self, points: np.ndarray) -> float:
        if self.cov_floor is not None:
            return self.cov_floor
        return 1e-6 * float(np.mean(np.var(points, axis=0)))


@dataclass(frozen=True, eq=False)
class GmmModel:
    """Fitted mixture: weights (c,), means (c, 2), covariances (c, 2, 2)."""

    weights: np.ndarray
    means: np.ndarray
    covariances: np.ndarray
    loglik: float = float("nan")
    n_fit: int = 0
    projection_center: Optional[GeoPoint] = None
    seed: Optional[int] = None
    loglik_trace: tuple = field(default=(), repr=False)
    objective_trace: tuple = field(default=(), repr=False)

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float).ravel()
        mu = np.asarray(self.means, dtype=float).reshape(-1, 2)
        cov = np.asarray(self.covariances, dtype=float).reshape(-1, 2, 2)
        if not (len(w) == len(mu) == len(cov)) or len(w) == 0:
            raise ValueError("weights, means and covariances disagree on component count")
        if np.any(w <= 0):
            raise ValueError("mixture weights must be positive")
        if abs(w.sum() - 1.0) > 1e-9:
            raise ValueError(f"mixture weights sum to {w.sum()}")
        w = w / w.sum()
        if not np.allclose(cov, cov.transpose(0, 2, 1)):
            raise ValueError("covariances must be symmetric")
        if np.any(np.linalg.det(cov) <= 0) or np.any(np.trace(cov, axis1=1, axis2=2) <= 0):
            raise ValueError("covariances must be positive definite")
        for name, value in (("weights", w), ("means", mu), ("covariances", cov)):
            value.setflags(write=False)
            object.__setattr__(self, name, value)

    @property
    def c(self) -> int:
        return len(self.weights)

    @property
    def bic(self) -> float:
        return bic(self.loglik, self.c, self.n_fit) if self.n_fit else float("nan")

    def mean(self) -> np.ndarray:
        """Mean of the whole mixture."""
        return self.weights @ self.means

    def log_density(self, points) -> np.ndarray:
        """Per-point log of the mixture density."""
        return _logsumexp_rows(_weighted_log_pdf(np.asarray(points, float), self))[:, 0]

    def responsibilities(self, points) -> np.ndarray:
        lp = _weighted_log_pdf(np.asarray(points, float), self)
        return np.exp(lp - _logsumexp_rows(lp))

    def to_dict(self) -> dict:
        center = self.projection_center
        return {
            "version": MODEL_VERSION,
            "c": self.c,
            "weights": self.weights.tolist(),
            "means": self.means.tolist(),
            "covariances": [[s[0][0], s[0][1], s[1][1]] for s in self.covariances.tolist()],
            "loglik": self.loglik,
            "bic": self.bic,
            "n_fit": self.n_fit,
            "projection_center": None if center is None else {"lon": center.lon, "lat": center.lat},
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GmmModel":
        if d.get("version") != MODEL_VERSION:
            raise ValueError(f"unsupported model version {d.get('version')!r}")
        cov = np.array([[[sxx, sxy], [sxy, syy]] for sxx, sxy, syy in d["covariances"]])
        if len(d["weights"]) != d["c"]:
            raise ValueError("model 'c' disagrees with its weights")
        pc = d.get("projection_center")
        return cls(
            weights=np.array(d["weights"], dtype=float),
            means=np.array(d["means"], dtype=float),
            covariances=cov,
            loglik=float(d["loglik"]) if d.get("loglik") is not None else float("nan"),
            n_fit=int(d.get("n_fit") or 0),
            projection_center=None if pc is None else GeoPoint(pc["lon"], pc["lat"]),
            seed=d.get("seed"),
        )

    def save(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")

    @classmethod
    def load(cls, path: str) -> "GmmModel":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def bic(loglik: float, c: int, n_fit: int) -> float:
    """BIC in the larger-is-better form ``2 loglik - p ln n``.

    A 2-D full-covariance mixture has ``p = 6c - 1`` free parameters:
    c - 1 weights, 2c mean coordinates and 3c covariance entries.
    """
    if n_fit < 1 or c < 1:
        raise ValueError("bic needs n_fit >= 1 and c >= 1")
    return 2.0 * loglik - (6 * c - 1) * math.log(n_fit)


# ---------------------------------------------------------------------------
# EM internals


def _weighted_log_pdf(x: np.ndarray, model) -> np.ndarray:
    """log(pi_j) + log N(x | mu_j, Sigma_j), shape (n, c)."""
    cov = model.covariances
    sxx, sxy, syy = cov[:, 0, 0], cov[:, 0, 1], cov[:, 1, 1]
    det = sxx * syy - sxy * sxy
    dx = x[:, 0, None] - model.means[None, :, 0]
    dy = x[:, 1, None] - model.means[None, :, 1]
    quad = (syy * dx * dx - 2.0 * sxy * dx * dy + sxx * dy * dy) / det
    return np.log(model.weights) - LOG_2PI - 0.5 * np.log(det) - 0.5 * quad


@dataclass
class _Params:
    weights: np.ndarray
    means: np.ndarray
    covariances: np.ndarray


def _m_step(x: np.ndarray, resp: np.ndarray, ridge: float) -> _Params:
    """Exact maximiser of the penalised objective (see :func:`_penalty`)."""
    nk = np.maximum(resp.sum(axis=0), 1e-8)
    means = (resp.T @ x) / nk[:, None]
    dx = x[:, 0, None] - means[None, :, 0]
    dy = x[:, 1, None] - means[None, :, 1]
    sxx = ((resp * dx * dx).sum(axis=0) + ridge) / nk
    sxy = (resp * dx * dy).sum(axis=0) / nk
    syy = ((resp * dy * dy).sum(axis=0) + ridge) / nk
    covs = np.stack([np.stack([sxx, sxy], -1), np.stack([sxy, syy], -1)], axis=1)
    return _Params(nk / nk.sum(), means, covs)


def _penalty(params, ridge: float) -> float:
    """``ridge/2 * sum_j trace(inv(Sigma_j))``.

    EM maximises log-likelihood minus this term, which keeps components from
    collapsing onto single points. With covariances ``(S_j + ridge I) / N_j``
    the M-step is exact, so the penalised objective never decreases.
    """
    cov = params.covariances
    det = cov[:, 0, 0] * cov[:, 1, 1] - cov[:, 0, 1] ** 2
    return 0.5 * ridge * float(np.sum((cov[:, 0, 0] + cov[:, 1, 1]) / det))


def _kmeanspp_centers(x: np.ndarray, c: int, rng: np.random.Generator) -> np.ndarray:
    centers = [x[rng.integers(len(x))]]
    d2 = np.sum((x - centers[0]) ** 2, axis=1)
    for _ in range(1, c):
        total = d2.sum()
        if total <= 0:
            idx = rng.integers(len(x))
        else:
            idx = rng.choice(len(x), p=d2 / total)
        centers.append(x[idx])
        d2 = np.minimum(d2, np.sum((x - x[idx]) ** 2, axis=1))
    return np.array(centers)


def _initial_params(x: np.ndarray, c: int, ridge: float, rng) -> _Params:
    centers = _kmeanspp_centers(x, c, rng)
    d2 = ((x[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    resp = np.zeros((len(x), c))
    resp[np.arange(len(x)), np.argmin(d2, axis=1)] = 1.0
    params = _m_step(x, resp, ridge)
    # an empty hard cluster would otherwise start with zero weight
    empty = resp.sum(axis=0) == 0
    if np.any(empty):
        params.means[empty] = centers[empty]
        params.covariances[empty] = np.cov(x.T, bias=True) + ridge * np.eye(2)
        params.weights = np.where(empty, 1.0 / len(x), params.weights)
        params.weights /= params.weights.sum()
    return params


def _run_em(x: np.ndarray, c: int, ridge: float, cfg: EmConfig, rng):
    """One EM run; returns params and the log-likelihood and objective traces."""
    params = _initial_params(x, c, ridge, rng)
    ll_trace, obj_trace = [], []
    prev = -np.inf
    for _ in range(cfg.max_iters):
        lp = _weighted_log_pdf(x, params)
        norm = _logsumexp_rows(lp)
        ll = float(norm.sum())
        obj = ll - _penalty(params, ridge)
        ll_trace.append(ll)
        obj_trace.append(obj)
        if abs(obj - prev) <= cfg.rel_tol * abs(obj):
            break
        prev = obj
        params = _m_step(x, np.exp(lp - norm), ridge)
    else:
        # the loop ended on an M-step; score the parameters actually returned
        ll = float(_logsumexp_rows(_weighted_log_pdf(x, params)).sum())
        ll_trace.append(ll)
        obj_trace.append(ll - _penalty(params, ridge))
    return params, ll_trace, obj_trace


def _as_points(points) -> np.ndarray:
    x = np.asarray(points, dtype=float)
    if x.ndim != 2 or x.shape[1] != 2:
        raise ValueError("points must have shape (n, 2)")
    if not np.all(np.isfinite(x)):
        raise ValueError("points must be finite")
    return x


def fit_em(
    points,
    c: int,
    seed: int = 0,
    cfg: EmConfig = EmConfig(),
    projection_center: Optional[GeoPoint] = None,
) -> GmmModel:
    """Fit a ``c``-component full-covariance mixture by EM.

    EM is restarted ``cfg.restarts`` times from k-means++ seeds derived from
    ``seed``; the restart with the highest log-likelihood is returned.

    Parameters
    ----------
    points : array-like of shape (n, 2)
        Planar positions in km.
    c : int
        Number of components, ``1 <= c <= n``.

    Returns
    -------
    GmmModel
        ``loglik_trace`` holds the per-iteration log-likelihood of the
        winning restart; its last entry equals ``loglik``.
        ``objective_trace`` holds the quantity EM actually climbs, the
        log-likelihood minus a small covariance penalty; it never decreases.
    """
    x = _as_points(points)
    n = len(x)
    if c < 1:
        raise ValueError("c must be >= 1")
    if c > n:
        raise ValueError(f"cannot fit {c} components to {n} points")
    if c > 1 and np.all(x == x[0]):
        raise DegenerateDataError("degenerate data: all points identical")
    ridge = cfg.ridge(x)
    if ridge <= 0:
        ridge = 1e-12

    if c == 1:
        params = _m_step(x, np.ones((n, 1)), ridge)
        ll = float(_logsumexp_rows(_weighted_log_pdf(x, params)).sum())
        best, best_trace, best_obj = params, [ll], [ll - _penalty(params, ridge)]
    else:
        best, best_trace, best_obj = None, None, None
        for rng in (np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(cfg.restarts)):
            params, trace, obj = _run_em(x, c, ridge, cfg, rng)
            if not np.isfinite(trace[-1]):
                continue
            if best is None or trace[-1] > best_trace[-1]:
                best, best_trace, best_obj = params, trace, obj
        if best is None:
            raise FloatingPointError(f"EM failed to converge for c={c}")

    return GmmModel(
        weights=best.weights,
        means=best.means,
        covariances=best.covariances,
        loglik=best_trace[-1],
        n_fit=n,
        projection_center=projection_center,
        seed=seed,
        loglik_trace=tuple(best_trace),
        objective_trace=tuple(best_obj),
    )


def default_c_range(n_fit: int) -> tuple[int, int]:
    return 1, max(1, min(80, n_fit // 20))


def select_model(
    points,
    c_range: Optional[Sequence[int]] = None,
    seed: int = 0,
    cfg: EmConfig = EmConfig(),
    projection_center: Optional[GeoPoint] = None,
    return_table: bool = False,
):
    """Fit every component count in ``c_range`` and keep the best BIC.

    ``c_range`` is an inclusive ``(lo, hi)`` pair. Ties go to the smaller c.
    With ``return_table=True`` also returns ``[(c, loglik, bic), ...]``.
    """
    x = _as_points(points)
    lo, hi = default_c_range(len(x)) if c_range is None else c_range
    if lo < 1 or hi < lo:
        raise ValueError(f"invalid component range [{lo}, {hi}]")
    best, table = None, []
    for c in range(lo, hi + 1):
        model = fit_em(x, c, seed=seed, cfg=cfg, projection_center=projection_center)
        table.append((c, model.loglik, model.bic))
        log.info("c=%d loglik=%.4f bic=%.4f", c, model.loglik, model.bic)
        if best is None or model.bic > best.bic:
            best = model
    return (best, table) if return_table else best


def sample(model: GmmModel, n: int, seed: int = 0) -> np.ndarray:
    """Draw ``n`` positions from the mixture, shape (n, 2).

    Each point picks a component from the mixture weights, then is drawn from
    that component's Gaussian through its Cholesky factor.
    """
    if n < 0:
        raise ValueError("n must be non-negative")
    rng = np.random.default_rng(seed)
    z = rng.choice(model.c, size=n, p=model.weights)
    eps = rng.standard_normal((n, 2))
    chol = np.linalg.cholesky(model.covariances)
    return model.means[z] + np.einsum("nij,nj->ni", chol[z], eps)
