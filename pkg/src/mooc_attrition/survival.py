"""Cox proportional-hazards regression for week-of-dropout data.

Durations are week indices, so tied event times are the norm rather than
the exception.  The partial likelihood uses Efron's approximation for ties;
Breslow's is kept for cross-checking.  Only relative hazards are estimated.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy import stats

from .errors import DataError, NoEventsError, SingularHessianError, ZeroVarianceError
from .featurize import assemble_weekly, feature_names, last_active_week
from .graph_metrics import SOCIAL_FEATURES
from .ingest import CourseConfig, CourseData

TIES = ("efron", "breslow")


@dataclass(frozen=True)
class SurvivalRecord:
    student_id: str
    duration: float
    event: bool
    covariates: tuple[float, ...]


@dataclass(frozen=True)
class CoxOptions:
    ties: str = "efron"
    tol: float = 1e-8
    max_iter: int = 50
    max_halvings: int = 30


@dataclass
class CoxFit:
    beta: np.ndarray
    se: np.ndarray
    hr: np.ndarray
    p: np.ndarray
    loglik: float
    iterations: int
    converged: bool
    covariate_means: np.ndarray
    covariate_sds: np.ndarray
    loglik_trace: list[float] = field(default_factory=list)

    @property
    def z(self) -> np.ndarray:
        return self.beta / self.se


@dataclass(frozen=True)
class HazardRow:
    feature: str
    mean: float
    sd: float
    hr: float
    se: float
    p: float
    stars: str


def model_covariates(spec: str | Sequence[str], profile: str) -> tuple[str, ...]:
    """Resolve ``"no_grade"`` (every feature) or ``"social"`` (graph features only)."""
    if isinstance(spec, str):
        if spec == "no_grade":
            return feature_names(profile)
        if spec == "social":
            return SOCIAL_FEATURES
        raise DataError(f"unknown model spec {spec!r}")
    return tuple(spec)


# ---------------------------------------------------------------------------
# records


def to_survival_records(
    course: CourseData,
    config: CourseConfig | None = None,
    covariate_spec: str | Sequence[str] = "no_grade",
    graph_kind: str = "type1",
) -> list[SurvivalRecord]:
    """One record per active student, covariates taken at the end of the course.

    A student last seen in week ``L <= W - 2`` drops out in week ``L + 1``;
    everybody else is censored at ``W``.
    """
    config = config or course.config
    W = config.num_weeks
    names = model_covariates(covariate_spec, config.platform_profile)
    table = assemble_weekly(course, course.outcomes, config, W, graph_kind)
    if len(table) == 0:
        raise DataError("no active students to build survival records from")
    X = table.columns(names)
    last = last_active_week(course)
    records = []
    for i, s in enumerate(table.students):
        L = last[s]
        event = L <= W - 2
        records.append(SurvivalRecord(s, L + 1 if event else W, event, tuple(X[i].tolist())))
    return records


def _unpack(records: Sequence[SurvivalRecord]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    X = np.array([r.covariates for r in records], dtype=float)
    if X.ndim == 1:
        X = X.reshape(len(records), -1)
    T = np.array([r.duration for r in records], dtype=float)
    E = np.array([r.event for r in records], dtype=bool)
    return X, T, E


def standardize(
    records: Sequence[SurvivalRecord], names: Sequence[str] | None = None
) -> tuple[list[SurvivalRecord], np.ndarray, np.ndarray]:
    """Centre and scale each covariate by its sample (n - 1) standard deviation."""
    if len(records) < 2:
        raise DataError("standardization needs at least two records")
    X, _, _ = _unpack(records)
    means = X.mean(axis=0)
    sds = X.std(axis=0, ddof=1)
    for k, sd in enumerate(sds):
        if not sd > 0:
            raise ZeroVarianceError(names[k] if names is not None else f"x{k}")
    Z = (X - means) / sds
    out = [replace(r, covariates=tuple(z)) for r, z in zip(records, Z.tolist())]
    return out, means, sds


# ---------------------------------------------------------------------------
# partial likelihood


def partial_likelihood(
    beta: np.ndarray,
    X: np.ndarray,
    durations: np.ndarray,
    events: np.ndarray,
    ties: str = "efron",
) -> tuple[float, np.ndarray, np.ndarray]:
    """Log partial likelihood with its gradient and Hessian.

    For an event time with ``d`` tied failures ``D`` and risk set ``R`` the
    Efron contribution is

        sum_{i in D} eta_i - sum_{l<d} log(S_R - (l/d) S_D)

    where ``S`` sums ``exp(eta)`` over the set.  Breslow drops the ``l/d``
    correction.  The sums over ``l`` are evaluated in closed form.
    """
    if ties not in TIES:
        raise ValueError(f"ties must be one of {TIES}")
    X = np.asarray(X, dtype=float)
    beta = np.asarray(beta, dtype=float)
    n, p = X.shape
    order = np.argsort(-durations, kind="stable")
    Xs, Ts, Es = X[order], durations[order], events[order]
    eta = Xs @ beta
    eta = eta - eta.max()  # the shift cancels between the two terms
    w = np.exp(eta)
    wx = w[:, None] * Xs
    cum_w = np.cumsum(w)
    cum_wx = np.cumsum(wx, axis=0)
    cum_wxx = np.cumsum(wx[:, :, None] * Xs[:, None, :], axis=0)

    ll = 0.0
    grad = np.zeros(p)
    hess = np.zeros((p, p))
    neg_T = -Ts
    for t in np.unique(Ts[Es]):
        lo = np.searchsorted(neg_T, -t, side="left")
        hi = np.searchsorted(neg_T, -t, side="right")
        dmask = Es[lo:hi]
        d = int(dmask.sum())
        S_R, Z_R, Q_R = cum_w[hi - 1], cum_wx[hi - 1], cum_wxx[hi - 1]
        xd = Xs[lo:hi][dmask]
        ll += eta[lo:hi][dmask].sum()
        grad += xd.sum(axis=0)
        if ties == "efron":
            wd = w[lo:hi][dmask]
            S_D = wd.sum()
            Z_D = (wd[:, None] * xd).sum(axis=0)
            Q_D = (wd[:, None, None] * xd[:, :, None] * xd[:, None, :]).sum(axis=0)
            f = np.arange(d) / d
        else:
            S_D, Z_D, Q_D = 0.0, np.zeros(p), np.zeros((p, p))
            f = np.zeros(d)
        s = S_R - f * S_D
        inv = 1.0 / s
        ll -= np.log(s).sum()
        a0, a1 = inv.sum(), (f * inv).sum()
        b0, b1, b2 = (inv**2).sum(), (f * inv**2).sum(), (f**2 * inv**2).sum()
        grad -= a0 * Z_R - a1 * Z_D
        hess -= a0 * Q_R - a1 * Q_D
        hess += (
            b0 * np.outer(Z_R, Z_R)
            - b1 * (np.outer(Z_R, Z_D) + np.outer(Z_D, Z_R))
            + b2 * np.outer(Z_D, Z_D)
        )
    return float(ll), grad, hess


def _information(hess: np.ndarray, at_start: bool = True) -> np.ndarray:
    info = -hess
    eig = np.linalg.eigvalsh(info)
    if eig[0] <= 1e-10 * max(eig[-1], 1.0):
        if at_start:
            raise SingularHessianError(
                "observed information is singular; covariates may be collinear or constant"
            )
        raise SingularHessianError(
            "observed information became singular during fitting; the partial likelihood "
            "is monotone in some coefficient (a covariate separates events from censoring)"
        )
    return info


def cox_fit_arrays(
    X: np.ndarray,
    durations: np.ndarray,
    events: np.ndarray,
    options: CoxOptions | None = None,
) -> CoxFit:
    """Newton-Raphson from beta = 0 with step halving."""
    options = options or CoxOptions()
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    durations = np.asarray(durations, dtype=float)
    events = np.asarray(events, dtype=bool)
    if not events.any():
        raise NoEventsError("no observed events; the partial likelihood is constant")
    p = X.shape[1]
    beta = np.zeros(p)
    ll, g, H = partial_likelihood(beta, X, durations, events, options.ties)
    trace = [ll]
    converged = False
    it = 0
    for it in range(1, options.max_iter + 1):
        info = _information(H, at_start=it == 1)
        step = np.linalg.solve(info, g)
        for _ in range(options.max_halvings):
            cand = beta + step
            ll_new, g_new, H_new = partial_likelihood(cand, X, durations, events, options.ties)
            if np.isfinite(ll_new) and ll_new >= ll - 1e-12 * abs(ll):
                break
            step = step / 2
        else:
            break
        beta, ll, g, H = cand, ll_new, g_new, H_new
        trace.append(ll)
        if np.max(np.abs(step)) < options.tol:
            converged = True
            break
    cov = np.linalg.inv(_information(H, at_start=it <= 1))
    se = np.sqrt(np.diag(cov))
    pvals = 2 * stats.norm.sf(np.abs(beta / se))
    return CoxFit(
        beta=beta,
        se=se,
        hr=np.exp(beta),
        p=pvals,
        loglik=ll,
        iterations=it,
        converged=converged,
        covariate_means=np.zeros(p),
        covariate_sds=np.ones(p),
        loglik_trace=trace,
    )


def cox_fit(
    records: Sequence[SurvivalRecord],
    options: CoxOptions | None = None,
    *,
    means: np.ndarray | None = None,
    sds: np.ndarray | None = None,
) -> CoxFit:
    """Fit on (usually standardized) records.

    ``means``/``sds`` from :func:`standardize` are stored on the fit so the
    report can show the raw-scale summary of each covariate.
    """
    if not records:
        raise DataError("no survival records")
    X, T, E = _unpack(records)
    fit = cox_fit_arrays(X, T, E, options)
    if means is not None:
        fit.covariate_means = np.asarray(means, dtype=float)
    if sds is not None:
        fit.covariate_sds = np.asarray(sds, dtype=float)
    return fit


# ---------------------------------------------------------------------------
# reporting


def significance_stars(p: float) -> str:
    if p < 0.001:
        return "***"
    if p < 0.01:
        return "**"
    if p < 0.05:
        return "*"
    return ""


def hazard_report(fit: CoxFit, feature_names: Sequence[str]) -> list[HazardRow]:
    if len(feature_names) != len(fit.beta):
        raise ValueError("one feature name per coefficient is required")
    return [
        HazardRow(
            feature=name,
            mean=float(fit.covariate_means[k]),
            sd=float(fit.covariate_sds[k]),
            hr=float(fit.hr[k]),
            se=float(fit.se[k]),
            p=float(fit.p[k]),
            stars=significance_stars(fit.p[k]),
        )
        for k, name in enumerate(feature_names)
    ]


def write_hazard_csv(rows: Sequence[HazardRow], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["feature", "mean", "sd", "hr", "se", "p", "stars"])
        for r in rows:
            w.writerow([r.feature, f"{r.mean:.6f}", f"{r.sd:.6f}", f"{r.hr:.6f}", f"{r.se:.6f}", f"{r.p:.6g}", r.stars])


def fit_model(
    course: CourseData,
    spec: str | Sequence[str],
    graph_kind: str = "type1",
    options: CoxOptions | None = None,
) -> tuple[CoxFit, list[HazardRow]]:
    """Records, standardization, fit and report for one covariate set."""
    names = model_covariates(spec, course.config.platform_profile)
    records = to_survival_records(course, course.config, names, graph_kind)
    std, means, sds = standardize(records, names)
    fit = cox_fit(std, options, means=means, sds=sds)
    return fit, hazard_report(fit, names)
