"""Analysis chain: populations, coherence, fidelity, entanglement criteria,
decay timescales and the scaling exponent of the relative error probability.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import curve_fit
from scipy.special import gammaln, xlogy

from .errors import FitError
from .estimate import Estimate
from .measurement import ParityDataset, PmtShot, as_rng

DEFAULT_BOOTSTRAP = 1000


# -- parity oscillations --------------------------------------------------


@dataclass(frozen=True)
class ParityFit:
    """Result of fitting ``A cos(n phi + phase_offset) + vertical_offset``.

    ``coherence`` is ``|A|``, i.e. twice the magnitude of the GHZ
    off-diagonal element.
    """

    coherence: Estimate
    phase_offset: float
    vertical_offset: Estimate
    bootstrap_err: float | None = None
    chi2: float = 0.0


def _parity_design(phis, n):
    phis = np.asarray(phis, dtype=float)
    return np.column_stack([np.cos(n * phis), np.sin(n * phis), np.ones_like(phis)])


def _check_settings(phis, n):
    distinct = np.unique(np.round(np.asarray(phis, dtype=float), 12))
    if len(distinct) < 3:
        raise ValueError("parity fit needs at least 3 distinct phase settings")
    period = 2 * np.pi / n
    m = len(distinct)
    if np.ptp(distinct) < period * (m - 1) / m - 1e-9:
        raise ValueError("phase settings must span one parity period 2 pi / n")


def _solve(x, y, w):
    xtw = x.T * w
    a = xtw @ x
    if np.linalg.matrix_rank(a) < x.shape[1]:
        raise FitError("degenerate parity design", {"normal_matrix": a.tolist()})
    cov = np.linalg.inv(a)
    return cov @ (xtw @ y), cov, cov @ xtw


def _amplitude(coef, cov):
    a1, a2, b = coef
    amp = math.hypot(a1, a2)
    if amp > 0:
        g = np.array([a1 / amp, a2 / amp])
        var = float(g @ cov[:2, :2] @ g)
    else:
        var = 0.5 * float(cov[0, 0] + cov[1, 1])
    return amp, math.sqrt(max(var, 0.0)), math.atan2(-a2, a1)


def fit_parity_values(
    phis: Sequence[float], values: Sequence[float], n: int, errors: Sequence[float] | None = None
) -> ParityFit:
    """Linear least squares of parity values with the oscillation frequency fixed at ``n``."""
    _check_settings(phis, n)
    x = _parity_design(phis, n)
    y = np.asarray(values, dtype=float)
    if errors is None or np.any(np.asarray(errors) <= 0):
        w = np.ones_like(y)
    else:
        w = 1.0 / np.asarray(errors, dtype=float) ** 2
    coef, cov, _ = _solve(x, y, w)
    resid = y - x @ coef
    if errors is None:
        dof = max(len(y) - 3, 1)
        cov = cov * float(resid @ resid) / dof
    amp, amp_err, phase = _amplitude(coef, cov)
    return ParityFit(
        Estimate(amp, amp_err, len(y)),
        phase,
        Estimate(float(coef[2]), math.sqrt(cov[2, 2]), len(y)),
        chi2=float(np.sum(w * resid**2)),
    )


def fit_parity_curve(dataset: ParityDataset, n_boot: int = DEFAULT_BOOTSTRAP, seed=0) -> ParityFit:
    """Fit the parity oscillation of a shot-level dataset.

    Ordinary least squares on the per-setting parities; the covariance is the
    sandwich form with binomial variances evaluated on the fitted curve
    (floored at one shot).  Data-dependent weights would correlate with the
    amplitude and understate its error.  ``n_boot`` shot-level bootstrap
    resamples give an independent error for the amplitude.
    """
    n = dataset.n
    phis = dataset.phis
    _check_settings(phis, n)
    shots = np.array([len(e.shots) for e in dataset.entries], dtype=float)
    if np.any(shots == 0):
        raise ValueError("every setting needs at least one shot")
    even = np.array(
        [sum(1 for s in e.shots if s.count("1") % 2 == 0) for e in dataset.entries], dtype=float
    )
    y = 2.0 * even / shots - 1.0
    x = _parity_design(phis, n)

    coef, _, proj = _solve(x, y, np.ones_like(y))
    pred = np.clip(x @ coef, -1.0, 1.0)
    var = np.maximum(1.0 - pred**2, 1.0 / shots) / shots
    cov = (proj * var) @ proj.T
    w = 1.0 / var
    if not np.all(np.isfinite(coef)):
        raise FitError("parity fit produced non-finite coefficients", {"coef": coef.tolist()})
    amp, amp_err, phase = _amplitude(coef, cov)
    resid = y - x @ coef

    boot_err = None
    if n_boot:
        rng = as_rng(seed)
        p_even = even / shots
        ev = rng.binomial(shots.astype(int)[None, :], p_even[None, :], size=(n_boot, len(shots)))
        yb = 2.0 * ev / shots[None, :] - 1.0
        cb = yb @ proj.T
        boot_err = float(np.std(np.hypot(cb[:, 0], cb[:, 1]), ddof=1))

    m = int(shots.sum())
    return ParityFit(
        Estimate(amp, amp_err, m),
        phase,
        Estimate(float(coef[2]), math.sqrt(cov[2, 2]), m),
        bootstrap_err=boot_err,
        chi2=float(np.sum(w * resid**2)),
    )


# -- populations ----------------------------------------------------------


def estimate_populations_camera(shots: Sequence[str]) -> Estimate:
    """Fraction of shots in 0...0 or 1...1 with binomial error."""
    m = len(shots)
    if m == 0:
        raise ValueError("no shots")
    n = len(shots[0])
    hits = sum(1 for s in shots if s in ("0" * n, "1" * n))
    p = hits / m
    return Estimate(p, math.sqrt(p * (1 - p) / m), m)


def population_histogram(shots: Sequence[str], n: int) -> np.ndarray:
    """Empirical distribution over all 2^n bitstrings."""
    idx = np.array([int(s, 2) for s in shots])
    return np.bincount(idx, minlength=2**n) / len(shots)


@dataclass(frozen=True)
class PmtPosterior:
    alpha: np.ndarray = field(repr=False)
    P: Estimate = Estimate(0.0)

    @property
    def mean(self) -> np.ndarray:
        return self.alpha / self.alpha.sum()


def pmt_log_likelihood(counts, n: int, lambda_ion: float, lambda_bg: float) -> np.ndarray:
    """log Poisson(counts; k lambda_ion + lambda_bg) for k = 0..n, one row per shot."""
    c = np.asarray(counts, dtype=float)[:, None]
    mu = np.arange(n + 1)[None, :] * lambda_ion + lambda_bg
    with np.errstate(divide="ignore"):
        return xlogy(c, mu) - mu - gammaln(c + 1)


def shot_posteriors(counts, n: int, lambda_ion: float, lambda_bg: float, prior=None) -> np.ndarray:
    """Posterior over the bright-ion number of each shot."""
    ll = pmt_log_likelihood(counts, n, lambda_ion, lambda_bg)
    if prior is not None:
        with np.errstate(divide="ignore"):
            ll = ll + np.log(np.asarray(prior))[None, :]
    ll -= ll.max(axis=1, keepdims=True)
    p = np.exp(ll)
    return p / p.sum(axis=1, keepdims=True)


def bayes_populations_pmt(
    shots: Sequence[PmtShot],
    lambda_ion: float,
    lambda_bg: float,
    n: int,
    n_samples: int = 1000,
    burn_in: int = 100,
    seed=0,
) -> PmtPosterior:
    """Posterior over the bright-number distribution ``q`` from Poissonian PMT counts.

    Prior: symmetric Dirichlet(1) over the n+1 bright numbers.  The posterior
    is explored by Gibbs sampling over the latent bright number of every shot,
    so ambiguity between overlapping count distributions widens the result.
    ``P`` is the posterior mean and standard deviation of ``q_0 + q_n``
    (Rao-Blackwellized over the sampled class counts).  ``alpha`` holds the
    Dirichlet parameters matching the posterior mean of the class counts.
    """
    if not lambda_ion > 0 or not lambda_bg >= 0:
        raise ValueError("lambda_ion must be > 0 and lambda_bg >= 0")
    counts = np.array([s.counts for s in shots], dtype=int)
    m = len(counts)
    k = n + 1
    if m == 0:
        alpha = np.ones(k)
        mean = 2.0 / k
        return PmtPosterior(alpha, Estimate(mean, math.sqrt(mean * (1 - mean) / (k + 1)), 0))

    # identical counts share a likelihood row
    values, mult = np.unique(counts, return_counts=True)
    ll = pmt_log_likelihood(values, n, lambda_ion, lambda_bg)
    ll -= ll.max(axis=1, keepdims=True)
    lik = np.exp(ll)

    rng = as_rng(seed)
    q = mult @ (lik / lik.sum(axis=1, keepdims=True)) / m
    q = (q + 1.0 / m) / (1.0 + k / m)
    means, variances, totals = [], [], []
    for it in range(burn_in + n_samples):
        resp = lik * q[None, :]
        resp /= resp.sum(axis=1, keepdims=True)
        z = rng.multinomial(mult, resp).sum(axis=0)
        a = 1.0 + z
        q = rng.dirichlet(a)
        if it >= burn_in:
            mu = (a[0] + a[n]) / a.sum()
            means.append(mu)
            variances.append(mu * (1 - mu) / (a.sum() + 1))
            totals.append(z)
    means = np.array(means)
    mean = float(means.mean())
    sd = math.sqrt(float(np.mean(variances) + means.var()))
    alpha = 1.0 + np.mean(totals, axis=0)
    return PmtPosterior(alpha, Estimate(mean, sd, m))


# -- fidelity and entanglement criteria ------------------------------------


def ghz_fidelity(P: Estimate, C: Estimate) -> Estimate:
    """F = (P + C)/2 for independent estimates."""
    return Estimate(
        0.5 * (P.value + C.value),
        0.5 * math.hypot(P.std_error, C.std_error),
        min(P.n_samples, C.n_samples),
    )


@dataclass(frozen=True)
class CriterionResult:
    name: str
    statistic: float
    threshold: float
    sigma: float

    @property
    def margin(self) -> float:
        return self.statistic - self.threshold

    @property
    def passed(self) -> bool:
        return self.margin > 0

    @property
    def exact(self) -> bool:
        """No statistical uncertainty: the sigma confidence is infinite."""
        return self.sigma == 0

    @property
    def sigma_confidence(self) -> float:
        if self.sigma == 0:
            return math.copysign(math.inf, self.margin) if self.margin else 0.0
        return self.margin / self.sigma

    def to_dict(self) -> dict:
        conf = self.sigma_confidence
        return {
            "name": self.name,
            "statistic": self.statistic,
            "threshold": self.threshold,
            "margin": self.margin,
            "sigma": conf if math.isfinite(conf) else None,
            "margin_err": self.sigma,
            "passed": self.passed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CriterionResult":
        return cls(d["name"], float(d["statistic"]), float(d["threshold"]), float(d["margin_err"]))


def criterion_fidelity_threshold(F: Estimate) -> CriterionResult:
    return CriterionResult("fidelity_threshold", F.value, 0.5, F.std_error)


def complementary_pairs(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Indices (s, s_bar) of every unordered complementary pair other than 0..0/1..1."""
    s = np.arange(1, 2 ** (n - 1))
    return s, (2**n - 1) - s


def _distill_threshold(pops, n):
    s, sb = complementary_pairs(n)
    if len(s) == 0:
        return np.zeros(pops.shape[:-1])
    return np.max(pops[..., s] + pops[..., sb], axis=-1)


def _genuine_threshold(pops, n):
    s, sb = complementary_pairs(n)
    return np.sum(np.sqrt(pops[..., s] * pops[..., sb]), axis=-1)


def _criterion(name, statistic, stat_err, pops, n_shots, n_boot, seed, threshold_fn):
    pops = np.asarray(pops, dtype=float)
    n = int(round(math.log2(len(pops))))
    if len(pops) != 2**n:
        raise ValueError("diagonal populations must have length 2^n")
    if pops.sum() > 1 + 1e-9 or pops.min() < -1e-12:
        raise ValueError("populations must be non-negative and sum to at most 1")
    pops = np.clip(pops, 0.0, None)
    thr = float(threshold_fn(pops, n))
    thr_err = 0.0
    if n_shots and n_boot:
        rng = as_rng(seed)
        p = pops / pops.sum()
        boot = rng.multinomial(n_shots, p, size=n_boot) / n_shots * pops.sum()
        thr_err = float(np.std(threshold_fn(boot, n), ddof=1))
    return CriterionResult(name, statistic, thr, math.hypot(stat_err, thr_err))


def criterion_distillability(
    c_magnitude: Estimate,
    diagonal_populations,
    n_population_shots: int | None = None,
    n_boot: int = DEFAULT_BOOTSTRAP,
    seed=0,
) -> CriterionResult:
    """2|c| against the largest complementary-pair population sum.

    When the populations come from ``n_population_shots`` shots their
    threshold error is bootstrapped (multinomial resampling).
    """
    return _criterion(
        "distillability",
        2 * c_magnitude.value,
        2 * c_magnitude.std_error,
        diagonal_populations,
        n_population_shots,
        n_boot,
        seed,
        _distill_threshold,
    )


def criterion_genuine_entanglement(
    c_magnitude: Estimate,
    diagonal_populations,
    n_population_shots: int | None = None,
    n_boot: int = DEFAULT_BOOTSTRAP,
    seed=0,
) -> CriterionResult:
    """|c| against the sum over complementary pairs of sqrt(rho_ss rho_s'bar s'bar)."""
    return _criterion(
        "genuine_entanglement",
        c_magnitude.value,
        c_magnitude.std_error,
        diagonal_populations,
        n_population_shots,
        n_boot,
        seed,
        _genuine_threshold,
    )


# -- decay curves ---------------------------------------------------------


def coherence_to_error_probability(C_t: Estimate, C_0: Estimate) -> Estimate:
    """eps = -ln(C_t/C_0)/2 with first-order error propagation.

    Sampled coherences may exceed the reference, giving a small negative eps.
    """
    if C_t.value <= 0 or C_0.value <= 0:
        raise ValueError("error probability undefined for non-positive coherence")
    eps = -0.5 * math.log(C_t.value / C_0.value)
    err = 0.5 * math.hypot(C_t.std_error / C_t.value, C_0.std_error / C_0.value)
    return Estimate(eps, err, C_t.n_samples)


@dataclass(frozen=True)
class DecayCurve:
    times: tuple[float, ...]
    coherence: tuple[Estimate, ...]

    def __post_init__(self):
        if len(self.times) != len(self.coherence):
            raise ValueError("times and coherence differ in length")
        if any(b <= a for a, b in zip(self.times, self.times[1:])):
            raise ValueError("times must be strictly increasing")

    @property
    def values(self) -> np.ndarray:
        return np.array([c.value for c in self.coherence])

    @property
    def errors(self) -> np.ndarray:
        return np.array([c.std_error for c in self.coherence])


@dataclass(frozen=True)
class DecayFit:
    model: str
    timescale: Estimate
    amplitude: Estimate
    gamma: Estimate | None = None


DECAY_MODELS = ("exponential", "gaussian", "full-OU")


def _exp_model(t, c0, tau):
    return c0 * np.exp(-t / tau)


def _gauss_model(t, c0, tau):
    return c0 * np.exp(-0.5 * (t / tau) ** 2)


def _ou_model(t, c0, t2, gamma):
    x = gamma * t
    return c0 * np.exp(-(np.expm1(-x) + x) / (t2 * gamma))


def _sigma_arg(curve):
    err = curve.errors
    return (err, True) if np.all(err > 0) else (None, False)


def _initial_timescale(t, y):
    below = np.nonzero(y < y[0] / math.e)[0]
    if len(below):
        return float(t[below[0]])
    return float(t[-1] if t[-1] > 0 else 1.0)


def _curve_fit(f, t, y, p0, sigma, absolute, **kw):
    try:
        popt, pcov = curve_fit(f, t, y, p0=p0, sigma=sigma, absolute_sigma=absolute, maxfev=20000, **kw)
    except (RuntimeError, ValueError) as exc:
        raise FitError(f"decay fit failed: {exc}", {"p0": list(p0)}) from exc
    if not np.all(np.isfinite(popt)):
        raise FitError("decay fit returned non-finite parameters", {"popt": popt.tolist()})
    perr = np.sqrt(np.clip(np.diag(pcov), 0, None)) if np.all(np.isfinite(pcov)) else np.full(len(popt), np.inf)
    return popt, perr


def fit_decay_timescale(curve: DecayCurve, model: str = "exponential") -> DecayFit:
    """Nonlinear least squares of ``C(t) = C(0) * shape(t)``.

    ``exponential`` returns the 1/e time T2, ``gaussian`` the time tau of
    exp(-(t/tau)^2/2), ``full-OU`` both T2 and the correlation rate gamma.
    """
    if model not in DECAY_MODELS:
        raise ValueError(f"model must be one of {DECAY_MODELS}")
    t = np.asarray(curve.times, dtype=float)
    y = curve.values
    if len(t) < 3:
        raise ValueError("need at least 3 points")
    sigma, absolute = _sigma_arg(curve)
    c0 = float(y[0]) if y[0] > 0 else float(np.max(y))
    tau0 = _initial_timescale(t, y)
    m = int(sum(c.n_samples for c in curve.coherence))
    if model == "exponential":
        popt, perr = _curve_fit(_exp_model, t, y, (c0, tau0), sigma, absolute, bounds=(0, np.inf))
    elif model == "gaussian":
        popt, perr = _curve_fit(_gauss_model, t, y, (c0, tau0 / math.sqrt(2)), sigma, absolute, bounds=(0, np.inf))
    else:
        popt, perr = _curve_fit(_ou_model, t, y, (c0, tau0, 10.0 / tau0), sigma, absolute, bounds=(0, np.inf))
        return DecayFit(model, Estimate(popt[1], perr[1], m), Estimate(popt[0], perr[0], m), Estimate(popt[2], perr[2], m))
    return DecayFit(model, Estimate(popt[1], perr[1], m), Estimate(popt[0], perr[0], m))


def fit_error_scale(curve: DecayCurve, reference_eps: Sequence[float]) -> tuple[Estimate, Estimate]:
    """Fit ``C(t) = C0 exp(-2 r eps_ref(t))`` and return (r, C0).

    With ``eps_ref`` the single-qubit error probability, ``r`` is the relative
    error probability eps(N, t)/eps(1, t), which is time independent under
    collective Gaussian dephasing.
    """
    t = np.asarray(reference_eps, dtype=float)
    y = curve.values
    if len(t) != len(y):
        raise ValueError("reference_eps must match the curve length")
    sigma, absolute = _sigma_arg(curve)
    c0 = float(y[0]) if y[0] > 0 else float(np.max(y))
    pos = (t > 0) & (y > 0) & (y < c0)
    r0 = float(np.median(-0.5 * np.log(y[pos] / c0) / t[pos])) if np.any(pos) else 1.0

    def model(e, c0_, r):
        return c0_ * np.exp(-2.0 * r * e)

    popt, perr = _curve_fit(model, t, y, (c0, max(r0, 1e-12)), sigma, absolute, bounds=(0, np.inf))
    m = int(sum(c.n_samples for c in curve.coherence))
    return Estimate(popt[1], perr[1], m), Estimate(popt[0], perr[0], m)


# -- scaling --------------------------------------------------------------


@dataclass(frozen=True)
class ScalingFit:
    alpha: float
    alpha_err: float
    ratios: tuple[tuple[int, Estimate], ...]
    intercept: float = 0.0
    chi2: float = 0.0


def fit_scaling_exponent(eps_ratios: Sequence[tuple[int, Estimate]]) -> ScalingFit:
    """Weighted regression of ln(eps(N)/eps(1)) on ln(N).

    Errors are taken as absolute.  When no ratio carries an error the
    regression is unweighted and the slope error comes from the residuals
    (infinite with only two points).
    """
    ns = np.array([int(n) for n, _ in eps_ratios], dtype=float)
    if 1 not in ns:
        raise ValueError("scaling fit needs the N=1 reference")
    if len(np.unique(ns)) < 2:
        raise ValueError("scaling fit needs at least two distinct N")
    vals = np.array([r.value for _, r in eps_ratios])
    if np.any(vals <= 0) or not np.all(np.isfinite(vals)):
        raise ValueError("ratios must be positive and finite")
    errs = np.array([r.std_error for _, r in eps_ratios]) / vals
    x = np.column_stack([np.log(ns), np.ones_like(ns)])
    y = np.log(vals)
    weighted = np.any(errs > 0)
    if weighted:
        floor = errs[errs > 0].min()
        w = 1.0 / np.maximum(errs, floor) ** 2
    else:
        w = np.ones_like(y)
    xtw = x.T * w
    cov = np.linalg.inv(xtw @ x)
    coef = cov @ (xtw @ y)
    resid = y - x @ coef
    chi2 = float(np.sum(w * resid**2))
    if not weighted:
        dof = len(y) - 2
        cov = cov * (chi2 / dof if dof > 0 else math.inf)
    alpha_err = math.sqrt(cov[0, 0]) if np.isfinite(cov[0, 0]) else math.inf
    return ScalingFit(
        float(coef[0]),
        alpha_err,
        tuple((int(n), r) for n, r in eps_ratios),
        float(coef[1]),
        chi2,
    )
