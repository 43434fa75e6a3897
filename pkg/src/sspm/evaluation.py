"""Accuracy metrics and runtime checks of the sketches' error guarantees."""

from __future__ import annotations

import enum
from collections.abc import Mapping
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .deletion import DoubleSpaceSaving, exact
from .errors import EmptySupport, InsufficientItems, PreconditionNotMet
from .stream import StreamOp, exact_frequencies
from .workloads import check_gamma_decreasing


class BoundKind(str, enum.Enum):
    EPSILON_F1 = "EpsilonF1"
    RESIDUAL = "Residual"
    RELATIVE = "Relative"
    VARIANCE = "Variance"
    MERGE = "Merge"


@dataclass
class BoundReport:
    bound_kind: BoundKind
    bound_value: float
    max_observed_error: float
    violating_items: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return not self.violating_items

    def __str__(self) -> str:
        state = "PASS" if self.passed else "FAIL"
        return (
            f"{self.bound_kind.value}: {state} max_error={self.max_observed_error:g} "
            f"bound={self.bound_value:g} violations={len(self.violating_items)}"
        )


def estimate_array(estimate, items: Sequence[int]) -> np.ndarray:
    """Evaluate a sketch, mapping or callable on ``items``."""
    if hasattr(estimate, "query_many"):
        return np.asarray(estimate.query_many(np.asarray(items, dtype=np.uint64)))
    if isinstance(estimate, Mapping):
        return np.array([estimate.get(x, 0) for x in items])
    return np.array([estimate(x) for x in items])


def _table_arrays(exact_table: Mapping[int, int]) -> tuple[list[int], np.ndarray]:
    items = list(exact_table)
    return items, np.array([exact_table[x] for x in items], dtype=np.int64)


def compute_are(exact_table: Mapping[int, int], estimate) -> float:
    """Mean of ``|f - f_hat| / f`` over items with positive frequency."""
    support = [x for x, f in exact_table.items() if f > 0]
    if not support:
        raise EmptySupport("no item has positive frequency")
    f = np.array([exact_table[x] for x in support], dtype=np.float64)
    est = estimate_array(estimate, support).astype(np.float64)
    return float(np.mean(np.abs(f - est) / f))


def report_topk(exact_table: Mapping[int, int], estimate, k: int) -> set[int]:
    """Query every item in the support and keep the ``k`` largest estimates."""
    support = sorted(x for x, f in exact_table.items() if f > 0)
    est = estimate_array(estimate, support)
    order = sorted(range(len(support)), key=lambda i: (-est[i], support[i]))
    return {support[i] for i in order[:k]}


def topk_f1(exact_table: Mapping[int, int], reported, k: int) -> float:
    """F1 of ``reported`` against the true top-``k``; ties at rank ``k`` count as hits."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if len(exact_table) < k:
        raise InsufficientItems(f"need at least {k} items, have {len(exact_table)}")
    reported = set(reported)
    if not reported:
        return 0.0
    threshold = sorted(exact_table.values(), reverse=True)[k - 1]
    hits = sum(1 for x in reported if exact_table.get(x, 0) >= threshold and x in exact_table)
    if hits == 0:
        return 0.0
    precision = hits / len(reported)
    recall = min(hits, k) / k
    return 2 * precision * recall / (precision + recall)


def _abs_errors(exact_table, estimate):
    items, f = _table_arrays(exact_table)
    est = estimate_array(estimate, items)
    return items, f, est, np.abs(f - est)


def _report(kind, bound, items, f, est, err, extra=None) -> BoundReport:
    """Build a report; ``bound`` may be a Fraction and is compared exactly."""
    bound = Fraction(bound)
    loose = float(bound) * (1 - 1e-12) - 1e-9
    violating = [
        (items[i], int(f[i]), est[i].item())
        for i in np.nonzero(err > loose)[0]
        if Fraction(float(err[i])) > bound
    ]
    max_err = float(err.max()) if len(err) else 0.0
    return BoundReport(kind, float(bound), max_err, violating, dict(extra or {}))


def check_epsilon_bound(exact_table, estimate, epsilon, f1) -> BoundReport:
    """Every item touched by the stream must satisfy ``|f - f_hat| <= epsilon * F1``."""
    bound = exact(epsilon) * int(f1)
    items, f, est, err = _abs_errors(exact_table, estimate)
    return _report(BoundKind.EPSILON_F1, bound, items, f, est, err)


def top_frequencies(exact_table: Mapping[int, int], k: int) -> list[int]:
    return sorted(exact_table.values(), reverse=True)[:k]


def residual_bounds(exact_table, epsilon, alpha, k) -> dict:
    """Both residual bound values: the clean ``F1 - top_k/alpha`` form and the
    ``F1 - top_k/(2 alpha)`` form the Double sketch's derivation ends with."""
    eps, a = exact(epsilon), exact(alpha)
    f1 = sum(exact_table.values())
    top = sum(top_frequencies(exact_table, k))
    return {
        "integrated": eps / k * (f1 - top / a),
        "double": eps / k * (f1 - top / (2 * a)),
    }


def check_residual_bound(exact_table, estimate, epsilon, alpha, k, variant="integrated") -> BoundReport:
    """``|f - f_hat| <= (epsilon / k) * residual`` for sketches at the residual sizes.

    ``variant="integrated"`` checks the clean residual form; ``"double"`` checks
    the slightly looser expression proven for the Double sketch. Both values
    are stored in ``extra``.
    """
    bounds = residual_bounds(exact_table, epsilon, alpha, k)
    if variant not in bounds:
        raise ValueError(f"variant must be one of {sorted(bounds)}")
    bound = bounds[variant]
    items, f, est, err = _abs_errors(exact_table, estimate)
    return _report(BoundKind.RESIDUAL, bound, items, f, est, err,
                   {name: float(v) for name, v in bounds.items()})


def fit_zipf(freqs_desc: Sequence[float], top: int = 100) -> tuple[float, float]:
    """Least-squares Zipf exponent on log-rank/log-frequency. Returns ``(beta, r2)``."""
    f = np.asarray([v for v in freqs_desc[:top] if v > 0], dtype=np.float64)
    if len(f) < 2:
        return float("nan"), 0.0
    x = np.log(np.arange(1, len(f) + 1))
    y = np.log(f)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid ** 2)) / ss_tot if ss_tot > 0 else 0.0
    return float(-slope), r2


def relative_precondition(exact_table, insert_table, gamma, top=100, r2_min=0.95) -> dict:
    """Check the skew assumptions behind the relative bound.

    Raises :class:`PreconditionNotMet` when the sorted insertion counts are not
    gamma-decreasing or the exact frequencies do not fit a Zipf law.
    """
    inserts = sorted((c for c in insert_table.values() if c > 0), reverse=True)
    if not check_gamma_decreasing(inserts, gamma):
        raise PreconditionNotMet(f"insertion counts are not {gamma}-decreasing")
    freqs = sorted((v for v in exact_table.values() if v > 0), reverse=True)
    beta, r2 = fit_zipf(freqs, top)
    if not r2 >= r2_min:
        raise PreconditionNotMet(f"Zipf fit too poor (R^2={r2:.3f} < {r2_min})")
    return {"beta_fit": beta, "r2": r2}


def check_relative_bound(exact_table, estimate, epsilon, k, insert_table=None, gamma=None) -> BoundReport:
    """``|f_i - f_hat_i| <= epsilon * f_i`` for the ``k`` most frequent items.

    When ``insert_table`` and ``gamma`` are given, the skew precondition is
    checked first and :class:`PreconditionNotMet` propagates if it fails.
    ``max_observed_error`` is the largest relative error among the top ``k``.
    """
    extra = {}
    if insert_table is not None and gamma is not None:
        extra = relative_precondition(exact_table, insert_table, gamma)
    eps = exact(epsilon)
    ranked = sorted(exact_table, key=lambda x: (-exact_table[x], x))[:k]
    f = np.array([exact_table[x] for x in ranked], dtype=np.int64)
    est = estimate_array(estimate, ranked)
    rel = np.abs(f - est) / np.maximum(f, 1)
    violating = [
        (ranked[i], int(f[i]), est[i].item())
        for i in range(len(ranked))
        if abs(int(f[i]) - est[i]) > eps * int(f[i])
    ]
    return BoundReport(BoundKind.RELATIVE, float(eps), float(rel.max()) if len(rel) else 0.0,
                       violating, extra)


def check_merge_bound(exact_table, merged, epsilon, f1) -> BoundReport:
    report = check_epsilon_bound(exact_table, merged, epsilon, f1)
    report.bound_kind = BoundKind.MERGE
    return report


VARIANCE_SLACK = 1.1
MEAN_SIGMAS = 4.0


def check_variance(
    stream: Sequence[StreamOp],
    epsilon,
    alpha,
    trials: int,
    base_seed: int = 0,
    clipped: bool = False,
    sketch_factory: Callable[[int], DoubleSpaceSaving] | None = None,
) -> BoundReport:
    """Monte-Carlo check of unbiasedness and the ``epsilon^2 F1^2`` variance bound.

    Runs the unbiased Double sketch once per seed ``base_seed + t``. An item
    passes when its mean estimate lies within ``4`` standard errors of ``f`` and
    its sample variance is at most ``1.1 * epsilon^2 * F1^2``.
    ``max_observed_error`` is the worst ratio to either limit (<= 1 passes).
    ``clipped=True`` uses the clipped query instead of the raw difference.
    """
    if trials < 1000:
        raise ValueError("trials must be >= 1000")
    table = exact_frequencies(stream)
    items, f = _table_arrays(table)
    f1 = int(f.sum())
    eps = float(exact(epsilon))
    if sketch_factory is None:
        def sketch_factory(seed):
            return DoubleSpaceSaving.from_epsilon(epsilon, alpha, unbiased=True, seed=seed)
    query_items = np.asarray(items, dtype=np.uint64)
    samples = np.empty((trials, len(items)), dtype=np.float64)
    for t in range(trials):
        sk = sketch_factory(base_seed + t)
        sk.extend(stream)
        samples[t] = sk.query_many(query_items) if clipped else sk.query_raw_many(query_items)
    mean = samples.mean(axis=0)
    var = samples.var(axis=0, ddof=1)
    var_bound = VARIANCE_SLACK * eps ** 2 * f1 ** 2
    window = MEAN_SIGMAS * np.sqrt(var / trials)
    dev = np.abs(mean - f)
    ratio_mean = np.where(window > 0, dev / np.where(window > 0, window, 1),
                          np.where(dev > 0, np.inf, 0.0))
    ratio_var = var / var_bound if var_bound > 0 else np.where(var > 0, np.inf, 0.0)
    worst = np.maximum(ratio_mean, ratio_var)
    violating = [(items[i], int(f[i]), float(mean[i])) for i in np.nonzero(worst > 1)[0]]
    extra = {
        "trials": trials,
        "variance_bound": var_bound,
        "max_variance": float(var.max()) if len(var) else 0.0,
        "max_mean_sigmas": float((dev / np.sqrt(np.maximum(var, 1e-300) / trials)).max())
        if len(var) else 0.0,
    }
    return BoundReport(BoundKind.VARIANCE, 1.0, float(worst.max()) if len(worst) else 0.0,
                       violating, extra)


def max_abs_error(exact_table, estimate) -> float:
    _, _, _, err = _abs_errors(exact_table, estimate)
    return float(err.max()) if len(err) else 0.0
