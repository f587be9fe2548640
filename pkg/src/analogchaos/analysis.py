"""Closed-form noise/chaos model, scaling-law extraction and plot-ready reshaping."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, special, stats

from .chaos import Outcome, ResultTable, estimate_ps, per_instance_ps
from .errors import InsufficientDataError, OutOfRangeError, ValidationError
from .model import Family


@dataclass(frozen=True)
class TheoryParams:
    """Inputs of the independent-excitation model.

    ``n_es`` and ``n_gs`` are effective (real-valued) counts of statistically
    independent excited and ground states; ``k`` and ``b_coeff`` describe
    ``n_es ~ exp(b_coeff * n**k)``.
    """

    sigma: float
    n_es: float
    n_gs: float = 1.0
    k: float = 0.0
    b_coeff: float = 1.0

    def __post_init__(self):
        vals = (self.sigma, self.n_es, self.n_gs, self.k, self.b_coeff)
        if not all(math.isfinite(v) for v in vals):
            raise ValidationError("theory parameters must be finite")
        if self.sigma <= 0 or self.n_es < 0 or self.n_gs < 1 or self.k < 0 or self.b_coeff <= 0:
            raise ValidationError("need sigma > 0, n_es >= 0, n_gs >= 1, k >= 0, b_coeff > 0")

    def success_probability(self, z: float) -> float:
        return p_success(p_single_gs(p_of_z(z), self.n_es), self.n_gs)


# -- single-pair and many-state probabilities ------------------------------


def p_of_z(z):
    """Probability that a standard normal lies below ``-z``.

    Evaluated as ``ndtr(-z)``, which uses the Cephes complementary error
    function (relative error around 1e-16 over the double range).
    """
    return special.ndtr(-np.asarray(z, dtype=float))[()]


def p_single_gs(p, n_es):
    """``(1 - p) ** n_es``: one ground state stays below all excited states."""
    p = np.asarray(p, dtype=float)
    if np.any((p < 0) | (p > 1)) or np.any(np.asarray(n_es) < 0):
        raise ValidationError("need 0 <= p <= 1 and n_es >= 0")
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.exp(np.asarray(n_es, dtype=float) * np.log1p(-p))
    return np.where(np.asarray(n_es) == 0, 1.0, out)[()]


def p_success(p1, n_gs):
    """``1 - (1 - p1) ** n_gs``: at least one ground state survives."""
    p1 = np.asarray(p1, dtype=float)
    if np.any((p1 < 0) | (p1 > 1)) or np.any(np.asarray(n_gs) < 1):
        raise ValidationError("need 0 <= p1 <= 1 and n_gs >= 1")
    with np.errstate(divide="ignore"):
        return (-np.expm1(np.asarray(n_gs, dtype=float) * np.log1p(-p1)))[()]


def required_z(p_s: float, n_es: float, n_gs: float = 1.0) -> float:
    """Small-failure approximation ``sqrt(2 (ln n_es - ln(1 - p_s) / n_gs))``."""
    if not 0 < p_s < 1 or n_es < 1:
        raise ValidationError("need 0 < p_s < 1 and n_es >= 1")
    return math.sqrt(2.0 * (math.log(n_es) - math.log1p(-p_s) / n_gs))


def required_z_exact(p_s: float, n_es: float, n_gs: float = 1.0) -> float:
    """Solve ``p_success(p_single_gs(p_of_z(z), n_es), n_gs) = p_s`` for ``z``.

    Inverted in closed form through the monotone chain, then polished with a
    bracketing root finder on the forward map.
    """
    if not 0 < p_s < 1 or n_es <= 0 or n_gs < 1:
        raise ValidationError("need 0 < p_s < 1, n_es > 0, n_gs >= 1")
    p1 = -math.expm1(math.log1p(-p_s) / n_gs)
    p = -math.expm1(math.log(p1) / n_es)
    z0 = float(-special.ndtri(p))

    def f(z):
        return float(p_success(p_single_gs(p_of_z(z), n_es), n_gs)) - p_s

    lo, hi = z0 - 1.0, z0 + 1.0
    while f(lo) > 0:
        lo -= 1.0
    while f(hi) < 0:
        hi += 1.0
    return optimize.brentq(f, lo, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps)


def fit_n_es(p_s: float, z: float, n_gs: float = 1.0) -> float:
    """Effective excited-state count implied by an observed ``p_s`` at given ``z``.

    A model diagnostic only; it assumes the independent-excitation model.
    """
    p1 = -math.expm1(math.log1p(-p_s) / n_gs)
    return math.log(p1) / math.log1p(-float(p_of_z(z)))


def sigma_required(w: float, d: float, n: float, k: float) -> float:
    """Noise scale ``1 / sqrt((w + d) n^k)`` (unit proportionality constant)."""
    if w + d <= 0 or n < 1:
        raise ValidationError("need w + d > 0 and n >= 1")
    return 1.0 / math.sqrt((w + d) * n**k)


def sigma_worst_case(n: float) -> float:
    """Worst case ``w, d ~ n`` and ``k = 1``: ``sigma ~ 1/n``."""
    return sigma_required(n / 2, n / 2, n, 1.0)


def chain_ps(j: float, sigma: float, n: int) -> float:
    """Uniform chain: success iff no coupler changes sign, ``(1 - p(J/sigma))^(n-1)``."""
    if j <= 0 or sigma <= 0 or n < 2:
        raise ValidationError("need j > 0, sigma > 0, n >= 2")
    return float(np.power(1.0 - p_of_z(j / sigma), n - 1))


# -- fits ------------------------------------------------------------------


@dataclass(frozen=True)
class FitResult:
    exponent: float
    intercept: float
    stderr: float
    residuals: np.ndarray = field(repr=False)
    intercept_stderr: float = math.nan


def _linear(x, y) -> FitResult:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 2 or np.ptp(x) == 0:
        raise InsufficientDataError("a line needs at least two distinct x values")
    res = stats.linregress(x, y)
    resid = y - (res.intercept + res.slope * x)
    if x.size < 3:
        return FitResult(float(res.slope), float(res.intercept), math.nan, resid)
    return FitResult(float(res.slope), float(res.intercept), float(res.stderr), resid, float(res.intercept_stderr))


def fit_power_law(points) -> FitResult:
    """Least squares of ``log sigma_p`` on ``log n``; ``exponent`` is the slope.

    ``intercept`` is the natural-log prefactor. With exactly two points the
    slope is exact and ``stderr`` is NaN.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValidationError("points must be (n, sigma_p) pairs")
    if np.any(pts <= 0):
        raise ValidationError("power-law fit needs positive n and sigma_p")
    return _linear(np.log(pts[:, 0]), np.log(pts[:, 1]))


def linear_fit(x, y) -> FitResult:
    """Ordinary least squares ``y = intercept + exponent * x``."""
    return _linear(x, y)


# -- sigma_p extraction ----------------------------------------------------


def monotone_decreasing(y, weights=None) -> np.ndarray:
    """Least-squares projection onto non-increasing sequences."""
    y = np.asarray(y, dtype=float)
    return optimize.isotonic_regression(y, weights=weights, increasing=False).x


def sigma_at_probability(sigmas, ps, p: float) -> float:
    """Noise level where a (monotonised) success curve crosses ``p``.

    Interpolates linearly in ``log sigma``. Raises :class:`OutOfRangeError`
    when ``p`` is not bracketed by the curve.
    """
    sig = np.asarray(sigmas, dtype=float)
    order = np.argsort(sig)
    sig = sig[order]
    curve = monotone_decreasing(np.asarray(ps, dtype=float)[order])
    if np.any(sig <= 0):
        raise ValidationError("sigmas must be positive")
    hit = np.flatnonzero(curve == p)
    if hit.size:
        return float(sig[hit[0]])
    for i in range(sig.size - 1):
        hi, lo = curve[i], curve[i + 1]
        if hi > p > lo:
            t = (hi - p) / (hi - lo)
            return float(np.exp(np.log(sig[i]) + t * (np.log(sig[i + 1]) - np.log(sig[i]))))
    raise OutOfRangeError(
        f"p={p} is not bracketed by success probabilities in [{curve.min()}, {curve.max()}]"
    )


def median_ps_curve(table: ResultTable, family, n: int) -> tuple[np.ndarray, np.ndarray]:
    sigmas = sorted({r.sigma for r in table.select(family, n)})
    if not sigmas:
        raise InsufficientDataError(f"no records for {family} n={n}")
    meds = [float(np.median(list(per_instance_ps(table.select(family, n, s)).values()))) for s in sigmas]
    return np.array(sigmas), np.array(meds)


def extract_sigma_p(table: ResultTable, p: float, family, n: int) -> float:
    """``sigma_p(n)``: where the median success probability of size ``n`` equals ``p``."""
    sigmas, meds = median_ps_curve(table, family, n)
    return sigma_at_probability(sigmas, meds, p)


def sigma_p_scaling(table: ResultTable, p: float, family) -> FitResult:
    """Fit ``sigma_p(n) ~ n^exponent`` across every size in the table (needs >= 3)."""
    sizes = sorted({r.n for r in table.select(family)})
    if len(sizes) < 3:
        raise InsufficientDataError("a scaling fit needs at least three sizes")
    return fit_power_law([(n, extract_sigma_p(table, p, family, n)) for n in sizes])


# -- chaos-event energy distributions --------------------------------------


@dataclass(frozen=True)
class EnergyDistribution:
    """Mean/std of chaos-event excitation energies per value of the swept variable.

    ``variable`` is ``"sigma"`` (fixed n) or ``"n"`` (fixed sigma);
    ``mean_fit`` is linear in the variable and ``std_fit`` linear in its
    square root.
    """

    variable: str
    keys: np.ndarray
    means: np.ndarray
    stds: np.ndarray
    counts: np.ndarray
    mean_fit: FitResult | None
    std_fit: FitResult | None


def energy_dist_stats(
    table: ResultTable, family, n: int | None = None, sigma: float | None = None, min_events: int = 30
) -> EnergyDistribution:
    """Statistics of the intended-Hamiltonian excitation energy of chaos events.

    Fix exactly one of ``n`` or ``sigma``. Values of the other variable with
    fewer than ``min_events`` events are left out.
    """
    if (n is None) == (sigma is None):
        raise ValidationError("fix exactly one of n or sigma")
    events = [r for r in table.select(family, n, sigma) if r.outcome is Outcome.CHAOS]
    if len(events) < min_events:
        raise InsufficientDataError(f"only {len(events)} chaos events; need {min_events}")
    variable = "sigma" if n is not None else "n"
    by_key: dict[float, list[float]] = {}
    for r in events:
        by_key.setdefault(r.sigma if variable == "sigma" else r.n, []).append(r.delta_e0)
    keys = np.array(sorted(k for k, v in by_key.items() if len(v) >= min_events), dtype=float)
    if keys.size == 0:
        raise InsufficientDataError(f"no {variable} value has {min_events} chaos events")
    vals = [np.asarray(by_key[k]) for k in keys]
    means = np.array([v.mean() for v in vals])
    stds = np.array([v.std(ddof=1) for v in vals])
    counts = np.array([v.size for v in vals])
    mean_fit = std_fit = None
    if keys.size >= 2:
        xs = np.concatenate([np.full(v.size, k) for k, v in zip(keys, vals)])
        mean_fit = linear_fit(xs, np.concatenate(vals))
        std_fit = linear_fit(np.sqrt(keys), stds)
    return EnergyDistribution(variable, keys, means, stds, counts, mean_fit, std_fit)


# -- collapse --------------------------------------------------------------


@dataclass(frozen=True)
class CollapsePoint:
    family: Family
    n: int
    sigma: float
    x: float
    median_ps: float
    ci: tuple[float, float]


def collapse_table(table: ResultTable, exponent: float, n_boot: int = 1000) -> list[CollapsePoint]:
    """Collapse coordinates ``x = sigma**exponent * n`` with median success and interval."""
    if not exponent > 0:
        raise ValidationError("collapse exponent must be positive")
    out = []
    for fam, n, sigma in table.groups():
        med, ci = estimate_ps(table, fam, n, sigma, n_boot)
        out.append(CollapsePoint(fam, n, sigma, sigma**exponent * n, med, ci))
    return out


def monotone_residual_variance(x, y) -> float:
    """Mean squared residual of ``y`` about the best non-increasing curve in ``x``.

    Small values mean the points lie on one common decreasing curve; used to
    compare how well different collapse variables merge sizes.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    # one curve value per distinct x: tied points share it
    ux, inverse, counts = np.unique(x, return_inverse=True, return_counts=True)
    means = np.bincount(inverse, weights=y) / counts
    fitted = monotone_decreasing(means, weights=counts.astype(float))
    return float(np.mean((y - fitted[inverse]) ** 2))
