"""Rasch model: weighted conditional maximum likelihood, person parameters, fit.

Item severities are estimated from the conditional likelihood given raw
scores, which does not involve person abilities. Elementary symmetric
functions are accumulated with the summation recursion and rescaled after
every item so that long scales cannot overflow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .errors import (ConvergenceError, DegenerateInputError, DiagnosticsError,
                     DomainError, NonIdentifiableError)
from .ingest import MissingPolicy, ResponseMatrix, check_weights, complete_cases

GRAD_TOL = 1e-8
MAX_ITER = 200
RELIABILITY_FORMULA = "1 - wmean(se_theta^2) / wvar(theta), non-extreme respondents"


def irf(theta, b):
    """Probability of affirming an item of severity ``b`` at ability ``theta``."""
    return expit(np.subtract(theta, b))


@dataclass(frozen=True, eq=False)
class ItemParams:
    codes: tuple[str, ...]
    severities: np.ndarray
    se: np.ndarray
    centered: bool = True
    n_iter: int = 0
    grad_norm: float = 0.0
    loglik: float = float("nan")

    def __post_init__(self):
        object.__setattr__(self, "codes", tuple(self.codes))
        b = np.array(self.severities, dtype=float)
        se = np.array(self.se, dtype=float)
        if b.shape != (len(self.codes),) or se.shape != b.shape:
            raise ValueError("severities and se must have one entry per item code")
        if not np.all(np.isfinite(b)):
            raise DomainError("item severities must be finite")
        b.flags.writeable = False
        se.flags.writeable = False
        object.__setattr__(self, "severities", b)
        object.__setattr__(self, "se", se)

    @property
    def n_items(self) -> int:
        return len(self.codes)

    def __getitem__(self, code: str) -> float:
        return float(self.severities[self.codes.index(code)])

    def select(self, codes) -> np.ndarray:
        return np.array([self[c] for c in codes])

    @classmethod
    def fixed(cls, codes, severities) -> "ItemParams":
        """Externally supplied severities (e.g. a reference metric); no errors."""
        b = np.asarray(severities, dtype=float)
        return cls(tuple(codes), b, np.zeros_like(b), centered=False)


# -- elementary symmetric functions ---------------------------------------

def _esf_scaled(eps: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Batch summation algorithm.

    ``eps`` is ``m x J``. Returns ``(g, log_scale)`` with
    ``gamma[i, r] = g[i, r] * exp(log_scale[i])``.
    """
    eps = np.atleast_2d(eps)
    m, J = eps.shape
    g = np.zeros((m, J + 1))
    g[:, 0] = 1.0
    log_scale = np.zeros(m)
    for c in range(J):
        upd = eps[:, c:c + 1] * g[:, :-1]
        g[:, 1:] += upd
        mx = g.max(axis=1)
        g /= mx[:, None]
        log_scale += np.log(mx)
    return g, log_scale


def log_esf(b) -> np.ndarray:
    """Log elementary symmetric functions of ``exp(-b)``, orders 0..J."""
    g, ls = _esf_scaled(np.exp(-np.asarray(b, dtype=float))[None, :])
    with np.errstate(divide="ignore"):
        return np.log(g[0]) + ls[0]


def _conditional_moments(b: np.ndarray):
    """Per-score conditional item probabilities and pairwise joint probabilities.

    Returns ``pi`` (``(J+1) x J``, P(x_j = 1 | r)) and ``pair``
    (``(J+1) x J x J``, P(x_j = x_k = 1 | r), diagonal equal to ``pi``), plus
    ``log gamma``.
    """
    J = b.size
    eps = np.exp(-b)
    g, ls = _esf_scaled(eps[None, :])
    g, ls = g[0], ls[0]

    e1 = np.tile(eps, (J, 1))
    np.fill_diagonal(e1, 0.0)
    g1, ls1 = _esf_scaled(e1)

    jj, kk = np.meshgrid(np.arange(J), np.arange(J), indexing="ij")
    e2 = np.tile(eps, (J * J, 1))
    rows = np.arange(J * J)
    e2[rows, jj.ravel()] = 0.0
    e2[rows, kk.ravel()] = 0.0
    g2, ls2 = _esf_scaled(e2)

    pi = np.zeros((J + 1, J))
    pair = np.zeros((J + 1, J, J))
    for r in range(1, J + 1):
        pi[r] = eps * g1[:, r - 1] * np.exp(ls1 - ls) / g[r]
        if r >= 2:
            joint = (eps[:, None] * eps[None, :]
                     * (g2[:, r - 2] * np.exp(ls2 - ls)).reshape(J, J) / g[r])
            np.fill_diagonal(joint, 0.0)
            pair[r] = joint
        pair[r][np.diag_indices(J)] = pi[r]
    with np.errstate(divide="ignore"):
        log_gamma = np.log(g) + ls
    return pi, pair, log_gamma


def conditional_loglik(b, x, w=None) -> float:
    """Weighted conditional log-likelihood of complete 0/1 data given raw scores.

    Extreme scores contribute exactly zero.
    """
    b = np.asarray(b, dtype=float)
    x = np.asarray(x, dtype=float)
    w = np.ones(x.shape[0]) if w is None else np.asarray(w, dtype=float)
    r = x.sum(axis=1).astype(int)
    lg = log_esf(b)
    return float(np.sum(w * (-(x @ b) - lg[r])))


# -- estimation -----------------------------------------------------------

@dataclass(frozen=True)
class _Sufficient:
    item_totals: np.ndarray   # weighted affirmations per item, non-extreme rows
    score_counts: np.ndarray  # weighted count per raw score 0..J (extremes zeroed)


def _sufficient(x: np.ndarray, w: np.ndarray, codes) -> _Sufficient:
    J = x.shape[1]
    r = x.sum(axis=1)
    keep = (r > 0) & (r < J)
    if not np.any(w[keep] > 0):
        raise DegenerateInputError("no respondent with a non-extreme raw score")
    wk = w[keep]
    totals = wk @ x[keep]
    n_r = np.bincount(r[keep], weights=wk, minlength=J + 1)
    total = wk.sum()
    for j, code in enumerate(codes):
        if totals[j] <= 0 or totals[j] >= total:
            raise NonIdentifiableError(code)
    return _Sufficient(totals, n_r)


def _loglik(b, suff: _Sufficient, log_gamma) -> float:
    return float(-np.dot(suff.item_totals, b) - np.dot(suff.score_counts, log_gamma))


def fit_cml(m: ResponseMatrix, policy: MissingPolicy = "exclude", *,
            weighted: bool = True, tol: float = GRAD_TOL,
            max_iter: int = MAX_ITER) -> ItemParams:
    """Weighted CML estimates of item severities, centred to mean zero.

    Weights are normalised to mean one over the analysed rows, so estimates
    and standard errors are unchanged by any positive rescaling of the
    weight vector.
    """
    if m.n_items < 2:
        raise DegenerateInputError("at least 2 items are required")
    x, w, _ = complete_cases(m, policy)
    if not weighted:
        w = np.ones_like(w)
    check_weights(w)
    w = w / w.mean()
    suff = _sufficient(x, w, m.items)
    J = m.n_items

    n_total = suff.score_counts.sum()
    p = suff.item_totals / n_total
    b = np.log((1 - p) / p)
    b -= b.mean()

    ones = np.ones((J, J)) / J
    pi, pair, lg = _conditional_moments(b)
    ll = _loglik(b, suff, lg)
    grad_norm = math.inf
    for it in range(1, max_iter + 1):
        grad = -suff.item_totals + suff.score_counts @ pi
        grad_norm = float(np.max(np.abs(grad)))
        if grad_norm < tol:
            break
        cov = pair - pi[:, :, None] * pi[:, None, :]
        info = np.tensordot(suff.score_counts, cov, axes=1)
        step = np.linalg.solve(info + ones * np.trace(info) / J, grad)
        t = 1.0
        while True:
            b_new = b + t * step
            b_new -= b_new.mean()
            pi_n, pair_n, lg_n = _conditional_moments(b_new)
            ll_new = _loglik(b_new, suff, lg_n)
            if ll_new >= ll - 1e-12 * abs(ll) or t < 1e-10:
                break
            t *= 0.5
        b, pi, pair, lg, ll = b_new, pi_n, pair_n, lg_n, ll_new
    else:
        raise ConvergenceError(f"CML did not converge in {max_iter} iterations", grad_norm)

    cov = pair - pi[:, :, None] * pi[:, None, :]
    info = np.tensordot(suff.score_counts, cov, axes=1)
    # covariance of the centred estimates: project out the unidentified shift
    proj = np.eye(J) - ones
    cov_b = proj @ np.linalg.inv(info + ones * np.trace(info) / J) @ proj
    se = np.sqrt(np.clip(np.diag(cov_b), 0.0, None))
    return ItemParams(m.items, b, se, True, it, grad_norm, ll)


# -- test characteristic curve and person parameters ---------------------

def _severities(b) -> np.ndarray:
    return b.severities if isinstance(b, ItemParams) else np.asarray(b, dtype=float)


def tcc(theta, b):
    """Expected raw score at ``theta``: sum of the item response functions."""
    sev = _severities(b)
    return np.sum(irf(np.asarray(theta, dtype=float)[..., None], sev), axis=-1)


def test_information(theta, b):
    p = irf(np.asarray(theta, dtype=float)[..., None], _severities(b))
    return np.sum(p * (1 - p), axis=-1)


test_information.__test__ = False  # keep pytest from collecting it


def invert_tcc(t: float, b, tol: float = 1e-10) -> float:
    """Ability whose expected raw score equals ``t`` (``0 < t < J``)."""
    sev = _severities(b)
    J = sev.size
    t = float(t)
    if not (0.0 < t < J):
        raise DomainError(f"true score {t} outside the open range (0, {J})")
    lo, hi = -10.0, 10.0
    while tcc(lo, sev) > t:
        lo *= 2
    while tcc(hi, sev) < t:
        hi *= 2
    theta = 0.5 * (lo + hi)
    for _ in range(200):
        f = float(tcc(theta, sev)) - t
        if abs(f) < 0.01 * tol:
            break
        if f > 0:
            hi = theta
        else:
            lo = theta
        d = float(test_information(theta, sev))
        cand = theta - f / d if d > 0 else math.nan
        theta = cand if lo < cand < hi else 0.5 * (lo + hi)
        if hi - lo < 1e-15 * max(1.0, abs(theta)):
            break
    if abs(float(tcc(theta, sev)) - t) >= tol:
        raise DomainError(f"could not invert the TCC at t={t}")
    return theta


@dataclass(frozen=True, eq=False)
class PersonParams:
    """Ability and measurement error per raw score 0..J."""

    theta: np.ndarray
    se: np.ndarray
    target: np.ndarray
    pseudo: np.ndarray = field(repr=False)

    @property
    def scores(self) -> np.ndarray:
        return np.arange(self.theta.size)

    def adjusted(self, slope: float, intercept: float) -> "PersonParams":
        """Move onto another metric: theta* = A theta + B, se* = A se."""
        return PersonParams(slope * self.theta + intercept, slope * self.se,
                            self.target, self.pseudo)


def estimate_person_params(b, pseudo_extremes: tuple[float, float] = (0.5, 0.5)
                           ) -> PersonParams:
    """ML ability for each raw score; extremes use pseudo-scores 0.5 and J - 0.5."""
    sev = _severities(b)
    J = sev.size
    targets = np.arange(J + 1, dtype=float)
    targets[0] = pseudo_extremes[0]
    targets[J] = J - pseudo_extremes[1]
    theta = np.array([invert_tcc(t, sev) for t in targets])
    se = 1.0 / np.sqrt(test_information(theta, sev))
    pseudo = np.zeros(J + 1, dtype=bool)
    pseudo[[0, J]] = True
    return PersonParams(theta, se, targets, pseudo)


# -- fit statistics -------------------------------------------------------

@dataclass(frozen=True, eq=False)
class FitReport:
    codes: tuple[str, ...]
    infit: np.ndarray
    outfit: np.ndarray
    reliability: float
    residual_corr: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    n_used: int
    reliability_formula: str = RELIABILITY_FORMULA

    def item_status(self, infit_band=(0.7, 1.3), max_abs_corr=0.4) -> list[str]:
        lo, hi = infit_band
        off = np.abs(self.residual_corr - np.eye(len(self.codes)))
        status = []
        for j in range(len(self.codes)):
            ok = lo < self.infit[j] < hi and off[j].max() < max_abs_corr
            status.append("PASS" if ok else "WARN")
        return status

    def acceptable(self, infit_band=(0.7, 1.3), max_abs_corr=0.4) -> bool:
        return all(s == "PASS" for s in self.item_status(infit_band, max_abs_corr))


def _weighted_corr(z: np.ndarray, w: np.ndarray) -> np.ndarray:
    w = w / w.sum()
    zc = z - w @ z
    cov = (zc * w[:, None]).T @ zc
    sd = np.sqrt(np.diag(cov))
    if np.any(sd <= 0):
        raise DiagnosticsError("a residual column has zero variance")
    corr = cov / np.outer(sd, sd)
    corr = 0.5 * (corr + corr.T)
    np.fill_diagonal(corr, 1.0)
    return corr


def fit_statistics(m: ResponseMatrix, b: ItemParams, p: PersonParams,
                   policy: MissingPolicy = "exclude", *, weighted: bool = True
                   ) -> FitReport:
    """Infit/outfit, residual correlations with their eigen-decomposition, reliability.

    Only respondents with non-extreme raw scores enter, since extreme-score
    residuals carry no information about item fit.
    """
    x, w, _ = complete_cases(m, policy)
    if not weighted:
        w = np.ones_like(w)
    J = m.n_items
    r = x.sum(axis=1)
    keep = (r > 0) & (r < J) & (w > 0)
    if not keep.any():
        raise DiagnosticsError("no respondent with a non-extreme raw score")
    x, w, r = x[keep].astype(float), w[keep], r[keep]
    theta = p.theta[r]
    if np.ptp(theta) == 0:
        raise DiagnosticsError("all respondents share one raw score; variance is degenerate")
    P = irf(theta[:, None], b.severities[None, :])
    var = P * (1 - P)
    resid = x - P
    z = resid / np.sqrt(var)
    infit = (w @ resid ** 2) / (w @ var)
    outfit = (w @ z ** 2) / w.sum()
    corr = _weighted_corr(z, w)
    vals, vecs = np.linalg.eigh(corr)
    order = np.argsort(vals)[::-1]

    wn = w / w.sum()
    mean_theta = wn @ theta
    var_theta = wn @ (theta - mean_theta) ** 2
    err_var = wn @ p.se[r] ** 2
    rel = float(np.clip(1.0 - err_var / var_theta, 0.0, 1.0))
    return FitReport(m.items, infit, outfit, rel, corr, vals[order], vecs[:, order],
                     int(keep.sum()))
