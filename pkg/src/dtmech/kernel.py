r"""Gamma-weighted time smearing and step-scheme analysis.

A discrete-time step count ``n`` and time quantum ``tau`` relate a discrete
observable to its continuous-time history through

.. math::

    F_{dt}(n) = \frac{1}{(n-1)!} \int_0^\infty u^{n-1} e^{-u} F_{ct}(\tau u)\,du ,

i.e. step ``n`` sees continuous time through a gamma(``n``) distributed
internal clock with mean ``n*tau`` and standard deviation ``sqrt(n)*tau``.
This module provides the weight density, two independent evaluation routes
for the smearing integral (generalized Gauss--Laguerre quadrature and Monte
Carlo over internal-time draws), sampling of the internal clock, and the
analysis of one-step mixing schemes: the signed delta coefficient, the exact
decomposition of the smearing density into gamma mixtures, and a spectral
advection probe that exhibits scheme-induced negativity on a periodic grid.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, NamedTuple

import numpy as np
from scipy.integrate import quad
from scipy.linalg import eig_banded
from scipy.special import gammaln

from ._util import pairwise_dot, pairwise_sum
from .errors import (
    BackwardOnly,
    DivergentTransform,
    GridUnderResolved,
    QuadratureNotConverged,
)

__all__ = [
    "GammaKernel",
    "QuadratureRule",
    "StepScheme",
    "TimeSignal",
    "TransformResult",
    "MonteCarloEstimate",
    "SchemeDecomposition",
    "AdvectionProbe",
    "gamma_density",
    "log_gamma_density",
    "transform_quadrature",
    "transform_monte_carlo",
    "sample_internal_time",
    "scheme_delta_coefficient",
    "scheme_density_decomposition",
    "advection_negativity_probe",
    "constant_signal",
    "monomial_signal",
    "cosine_signal",
    "complex_exponential_signal",
    "exponential_signal",
    "tabulated_signal",
    "default_node_count",
]

#: Absolute convergence floor used when a target value sits near zero.
ABSOLUTE_FLOOR = 1e-13

#: Relative error the adaptive fallback must reach before giving up.  The
#: fallback is a last resort for integrands that defeat node doubling (fast
#: oscillation against a wide weight); demanding the full doubling target
#: there would turn every hard-but-recoverable case into an exception.
FALLBACK_RELATIVE = 1e-6

#: Hard cap on Gauss--Laguerre node escalation.
MAX_NODE_COUNT = 2048


@dataclass(frozen=True)
class GammaKernel:
    """Step count and time quantum of the discrete evolution.

    The calculus is forward-only: ``n >= 1`` steps of duration ``tau > 0``.
    A backward branch (negative ``n``) is deliberately not defined — the
    smearing weight is supported on positive internal time only, which is
    what makes the discrete evolution time-asymmetric.
    """

    n: int
    tau: float

    def __post_init__(self):
        if isinstance(self.n, bool) or int(self.n) != self.n or self.n < 1:
            raise ValueError(f"step count n must be an integer >= 1, got {self.n!r}")
        object.__setattr__(self, "n", int(self.n))
        if not (float(self.tau) > 0.0 and math.isfinite(self.tau)):
            raise ValueError(f"time quantum tau must be finite and > 0, got {self.tau!r}")
        object.__setattr__(self, "tau", float(self.tau))

    def mean_time(self) -> float:
        return self.n * self.tau


def gamma_density(kernel: GammaKernel, xi, origin: float = 0.0):
    """Smearing weight as a density over internal time ``xi``.

    ``((xi-origin)/tau)**(n-1) * exp(-(xi-origin)/tau) / ((n-1)! * tau)`` for
    ``xi > origin`` and exactly 0 at or below the origin.  For ``n = 1`` the
    density jumps to ``1/tau`` immediately above the origin; the value at the
    origin itself is 0 by the support convention.
    """
    xi = np.asarray(xi, dtype=float)
    out = np.zeros_like(xi)
    s = xi - origin
    mask = s > 0.0
    if np.any(mask):
        out[mask] = np.exp(_log_density_core(kernel, s[mask]))
    if np.ndim(xi) == 0:
        return float(out)
    return out


def log_gamma_density(kernel: GammaKernel, xi, origin: float = 0.0):
    """Logarithm of :func:`gamma_density`, stable for large step counts.

    Uses log-gamma throughout, so step counts far beyond the overflow range
    of ``(n-1)!`` are fine.  Returns ``-inf`` on or below the origin.
    """
    xi = np.asarray(xi, dtype=float)
    out = np.full_like(xi, -np.inf)
    s = xi - origin
    mask = s > 0.0
    if np.any(mask):
        out[mask] = _log_density_core(kernel, s[mask])
    if np.ndim(xi) == 0:
        return float(out)
    return out


def _log_density_core(kernel: GammaKernel, s):
    n, tau = kernel.n, kernel.tau
    r = s / tau
    if n == 1:
        return -r - math.log(tau)
    return (n - 1) * np.log(r) - r - gammaln(n) - math.log(tau)


# ---------------------------------------------------------------------------
# signals


@dataclass(frozen=True)
class TimeSignal:
    """Continuous-time signal fed to the smearing transform.

    ``evaluate`` maps an array of times to values (real or complex).
    ``growth_rate`` is an optional declared exponential growth bound g with
    ``|F(t)| <= C * exp(g t)``; when present, convergence is decided from
    ``g * tau < 1`` directly and the screening probe is skipped.  Signals
    without a declared bound are screened numerically far beyond the weight's
    bulk before any transform is attempted.
    """

    evaluate: Callable[[np.ndarray], np.ndarray]
    growth_rate: float | None = None
    complex_valued: bool = False
    label: str = "custom"


def constant_signal(value: float = 1.0) -> TimeSignal:
    return TimeSignal(lambda t: np.full_like(np.asarray(t, dtype=float), value),
                      growth_rate=0.0, label=f"const({value})")


def monomial_signal(degree: int) -> TimeSignal:
    """``t**degree`` with k >= 0.  Polynomial growth declares a zero rate."""
    if degree < 0 or int(degree) != degree:
        raise ValueError(f"degree must be a non-negative integer, got {degree!r}")
    k = int(degree)
    return TimeSignal(lambda t: np.asarray(t, dtype=float) ** k,
                      growth_rate=0.0, label=f"t^{k}")


def cosine_signal(omega: float = 1.0) -> TimeSignal:
    return TimeSignal(lambda t: np.cos(omega * np.asarray(t, dtype=float)),
                      growth_rate=0.0, label=f"cos({omega}t)")


def complex_exponential_signal(omega: float = 1.0) -> TimeSignal:
    return TimeSignal(lambda t: np.exp(1j * omega * np.asarray(t, dtype=float)),
                      growth_rate=0.0, complex_valued=True,
                      label=f"exp(i{omega}t)")


def exponential_signal(rate: float, amplitude: float = 1.0) -> TimeSignal:
    """``amplitude * exp(rate * t)`` with the rate declared as growth bound."""
    return TimeSignal(
        lambda t: amplitude * np.exp(rate * np.asarray(t, dtype=float)),
        growth_rate=max(rate, 0.0),
        label=f"{amplitude}*exp({rate}t)",
    )


def tabulated_signal(times, values, order: int = 1) -> TimeSignal:
    """Signal interpolated from samples ``(times, values)``.

    ``order`` selects linear (1) or cubic-spline (3) interpolation.  The table
    is treated as a bounded signal (growth rate 0); evaluation beyond its last
    sample raises ``ValueError`` naming the range the transform needed, since
    extrapolating measured data silently would be worse than failing.
    """
    t = np.asarray(times, dtype=float)
    v = np.asarray(values, dtype=float)
    if t.ndim != 1 or t.shape != v.shape or t.size < 2:
        raise ValueError("tabulated signal needs matching 1-d times/values with >= 2 samples")
    if np.any(np.diff(t) <= 0):
        raise ValueError("tabulated signal times must be strictly increasing")
    if order == 1:
        def interp(q):
            return np.interp(q, t, v)
    elif order == 3:
        from scipy.interpolate import CubicSpline

        spline = CubicSpline(t, v)

        def interp(q):
            return spline(q)
    else:
        raise ValueError(f"interpolation order must be 1 or 3, got {order!r}")

    t_lo, t_hi = float(t[0]), float(t[-1])

    def evaluate(q):
        q = np.asarray(q, dtype=float)
        if np.any(q < t_lo - 1e-12) or np.any(q > t_hi + 1e-12):
            raise ValueError(
                f"tabulated signal spans [{t_lo}, {t_hi}] but evaluation "
                f"needed [{float(np.min(q))}, {float(np.max(q))}]; extend the table"
            )
        return interp(np.clip(q, t_lo, t_hi))

    return TimeSignal(evaluate, growth_rate=0.0, label="table")


# ---------------------------------------------------------------------------
# quadrature


def default_node_count(n: int) -> int:
    """Default Gauss--Laguerre size: ``max(32, ceil(4*sqrt(n)))``."""
    return max(32, math.ceil(4.0 * math.sqrt(n)))


@lru_cache(maxsize=256)
def _laguerre_rule(node_count: int, shape_param: int):
    """Nodes/weights for the weight ``u**shape_param * exp(-u)``, normalized.

    Golub--Welsch on the symmetric Jacobi matrix of the generalized Laguerre
    recurrence: diagonal ``2k + shape + 1``, off-diagonal ``sqrt(k (k+shape))``.
    The zeroth moment is set to one, so the weights sum to 1 and the rule
    integrates against the *normalized* gamma weight; this keeps every entry
    representable for shape parameters far beyond the overflow point of
    ``Gamma(shape+1)``.
    """
    k = np.arange(node_count, dtype=float)
    diag = 2.0 * k + shape_param + 1.0
    off = np.sqrt(k[1:] * (k[1:] + shape_param))
    band = np.zeros((2, node_count))
    band[0, 1:] = off
    band[1, :] = diag
    nodes, vecs = eig_banded(band, lower=False)
    weights = vecs[0, :] ** 2
    if node_count > 1:
        # Far-tail weights whose true size is below eigenvector noise (~eps^2)
        # come back as junk around 1e-32; a growing integrand would amplify
        # that junk by hundreds of orders of magnitude.  A true Gauss weight
        # tracks (normalized density) * (node gap), so anything exceeding that
        # estimate wildly is noise and gets zeroed.
        gaps = np.empty_like(nodes)
        gaps[1:-1] = 0.5 * (nodes[2:] - nodes[:-2])
        gaps[0] = nodes[1] - nodes[0]
        gaps[-1] = nodes[-1] - nodes[-2]
        with np.errstate(divide="ignore"):
            expected = (shape_param * np.log(nodes) - nodes
                        - gammaln(shape_param + 1) + np.log(gaps))
            junk = np.log(weights) > expected + 30.0
        weights[junk] = 0.0
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


@dataclass(frozen=True)
class QuadratureRule:
    """Generalized Gauss--Laguerre rule matched to a kernel's weight.

    ``nodes``/``weights`` integrate against the *normalized* weight
    ``u**(n-1) exp(-u) / (n-1)!`` (the weights sum to 1); a result in the
    unnormalized convention is the normalized one times ``(n-1)!``.
    ``error_target`` is the relative target used both for node-doubling
    acceptance and for the adaptive fallback.
    """

    step_count: int
    node_count: int
    nodes: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    error_target: float = 1e-10
    normalized: bool = True

    @classmethod
    def for_kernel(cls, kernel: GammaKernel, node_count: int | None = None,
                   error_target: float = 1e-10) -> "QuadratureRule":
        m = default_node_count(kernel.n) if node_count is None else int(node_count)
        if m < 1:
            raise ValueError(f"node count must be >= 1, got {node_count!r}")
        nodes, weights = _laguerre_rule(m, kernel.n - 1)
        return cls(step_count=kernel.n, node_count=m, nodes=nodes,
                   weights=weights, error_target=float(error_target))

    def doubled(self) -> "QuadratureRule":
        nodes, weights = _laguerre_rule(2 * self.node_count, self.step_count - 1)
        return QuadratureRule(step_count=self.step_count,
                              node_count=2 * self.node_count, nodes=nodes,
                              weights=weights, error_target=self.error_target)


class TransformResult(NamedTuple):
    """Value of the smearing integral plus its numerical provenance."""

    value: complex | float
    error: float
    node_count: int
    method: str


class MonteCarloEstimate(NamedTuple):
    estimate: complex | float
    standard_error: float


def _screen_convergence(signal: TimeSignal, kernel: GammaKernel) -> None:
    """Reject signals whose smearing integral cannot converge.

    A declared growth rate decides immediately (``g*tau >= 1`` diverges;
    marginal growth is rejected, not special-cased).  Without a declaration
    the integrand's log-magnitude is probed at ``u* = n + 10 sqrt(n) + 50``
    and at twice that; if the far window still dominates, the tail is growing
    and the transform is refused as suspected divergence.
    """
    if signal.growth_rate is not None:
        if signal.growth_rate * kernel.tau >= 1.0:
            raise DivergentTransform(
                f"declared growth rate {signal.growth_rate} with tau={kernel.tau} "
                f"gives g*tau >= 1; the smearing integral diverges"
            )
        return
    n, tau = kernel.n, kernel.tau
    u_star = n + 10.0 * math.sqrt(n) + 50.0
    offsets = np.array([0.0, 0.5, 1.0])

    def window_max(base):
        u = base + offsets
        f = np.abs(np.asarray(signal.evaluate(tau * u), dtype=complex))
        with np.errstate(divide="ignore"):
            return float(np.max((n - 1) * np.log(u) - u + np.log(f)))

    if window_max(2.0 * u_star) > window_max(u_star):
        raise DivergentTransform(
            "undeclared signal still grows against the weight at "
            f"u ~ {2 * u_star:.0f} (n={n}, tau={tau}); suspected divergence"
        )


def _laguerre_estimate(signal: TimeSignal, kernel: GammaKernel, node_count: int):
    nodes, weights = _laguerre_rule(node_count, kernel.n - 1)
    # far nodes whose weights underflow to 0 contribute nothing; skipping them
    # keeps growing signals from manufacturing inf * 0 at times that are
    # irrelevant anyway
    live = weights > 0.0
    values = np.asarray(signal.evaluate(kernel.tau * nodes[live]))
    return pairwise_dot(weights[live], values)


def transform_quadrature(signal: TimeSignal, kernel: GammaKernel,
                         rule: QuadratureRule | None = None,
                         abs_floor: float = ABSOLUTE_FLOOR) -> TransformResult:
    """Smearing integral by generalized Gauss--Laguerre quadrature.

    Starts from ``rule`` (default ``max(32, ceil(4 sqrt(n)))`` nodes) and
    doubles the node count until two consecutive estimates agree to the
    rule's relative target (or ``abs_floor`` absolutely); the difference of
    the last doubling is reported as the error estimate.  If escalation stalls
    — oscillatory signals with ``omega*tau*n`` large defeat polynomial rules —
    the integral is re-attempted in the standardized variable
    ``u = n + sqrt(n) s`` with adaptive panels before giving up.
    """
    _screen_convergence(signal, kernel)
    g = signal.growth_rate
    if g is not None and g > 0.0:
        # absorb the declared exponential growth into the weight:
        # F = exp(g t) H with H bounded turns the integral into
        # (1 - g tau)^(-n) times the transform of H at the inflated quantum
        # tau / (1 - g tau); the effective integrand decays, which keeps
        # far-node noise from being amplified by exp(+g t)
        shrink = 1.0 - g * kernel.tau
        inner = signal.evaluate

        def damped(t):
            t = np.asarray(t, dtype=float)
            damp = np.exp(-g * t)
            with np.errstate(over="ignore", invalid="ignore"):
                vals = np.asarray(inner(t)) * damp
            return np.where(damp == 0.0, 0.0, vals)

        eff_signal = TimeSignal(damped, growth_rate=0.0,
                                complex_valued=signal.complex_valued,
                                label=signal.label + "|tilted")
        eff_kernel = GammaKernel(kernel.n, kernel.tau / shrink)
        prefactor = shrink ** (-float(kernel.n))
        res = _transform_core(eff_signal, eff_kernel, rule, abs_floor)
        return TransformResult(res.value * prefactor, res.error * prefactor,
                               res.node_count, res.method)
    return _transform_core(signal, kernel, rule, abs_floor)


def _transform_core(signal: TimeSignal, kernel: GammaKernel,
                    rule: QuadratureRule | None,
                    abs_floor: float) -> TransformResult:
    if rule is None:
        rule = QuadratureRule.for_kernel(kernel)
    elif rule.step_count != kernel.n:
        raise ValueError(
            f"rule was built for step count {rule.step_count}, kernel has {kernel.n}"
        )
    rel = rule.error_target
    m = rule.node_count
    prev = _laguerre_estimate(signal, kernel, m)
    while m < MAX_NODE_COUNT:
        m *= 2
        cur = _laguerre_estimate(signal, kernel, m)
        err = abs(cur - prev)
        if err <= max(rel * abs(cur), abs_floor):
            if signal.complex_valued or np.iscomplexobj(cur):
                value = complex(cur)
            else:
                value = float(cur)
            return TransformResult(value, float(err), m, "laguerre")
        prev = cur
    return _adaptive_fallback(signal, kernel, rel, abs_floor)


def _adaptive_fallback(signal: TimeSignal, kernel: GammaKernel,
                       rel: float, abs_floor: float) -> TransformResult:
    """Standardized-variable adaptive quadrature, used when doubling fails."""
    n, tau = kernel.n, kernel.tau
    root = math.sqrt(n)
    lg = float(gammaln(n))

    def density_times(u, part):
        u = np.asarray(u, dtype=float)
        with np.errstate(over="ignore"):
            vals = np.asarray(signal.evaluate(tau * u))
        vals = vals.real if part == "re" else vals.imag
        with np.errstate(divide="ignore", invalid="ignore"):
            if n > 1:
                logw = (n - 1) * np.log(np.maximum(u, 0.0)) - u - lg
            else:
                logw = -u
            w = np.where(u > 0, np.exp(logw), 0.0)
            return np.where(w == 0.0, 0.0, w * vals)

    s_hi = 40.0
    breakpoints = [p for p in (-4.0, -2.0, 0.0, 2.0, 4.0, 8.0) if -root < p < s_hi]

    def integrate(part):
        def f(s):
            return density_times(n + root * s, part) * root

        core, core_err = quad(f, -root, s_hi, limit=800, points=breakpoints)
        tail, tail_err = quad(f, s_hi, np.inf, limit=200)
        return core + tail, core_err + tail_err

    re_val, re_err = integrate("re")
    if signal.complex_valued:
        im_val, im_err = integrate("im")
        value, err = complex(re_val, im_val), re_err + im_err
    else:
        value, err = re_val, re_err
    ceiling = max(rel * abs(value), FALLBACK_RELATIVE * abs(value), abs_floor)
    if not np.isfinite(err) or not np.isfinite(abs(value)) or err > ceiling:
        raise QuadratureNotConverged(
            f"adaptive fallback error {err:.3e} exceeds {ceiling:.3e} "
            f"for n={n}, tau={tau}",
            value=value, error=err,
        )
    return TransformResult(value, float(err), 0, "adaptive")


# ---------------------------------------------------------------------------
# Monte Carlo route


def _gamma_variates(n: int, rng: np.random.Generator, size: int) -> np.ndarray:
    """Gamma(n, 1) draws: summed exponentials for small shape, rejection above.

    For ``n <= 16`` each draw is ``-log`` of the product of ``n`` uniforms.
    Larger shapes use the standard squeeze/rejection method (cube of a shifted
    normal with ``d = n - 1/3``), refilling rejected slots in deterministic
    batches so a fixed seed always yields the identical sample sequence.
    """
    if n <= 16:
        u = rng.random((size, n))
        return -np.log(u).sum(axis=1)
    d = n - 1.0 / 3.0
    c = 1.0 / math.sqrt(9.0 * d)
    out = np.empty(size)
    pending = np.arange(size)
    while pending.size:
        x = rng.standard_normal(pending.size)
        v = (1.0 + c * x) ** 3
        u = rng.random(pending.size)
        with np.errstate(divide="ignore", invalid="ignore"):
            ok = (v > 0) & (np.log(u) < 0.5 * x * x + d - d * v + d * np.log(v))
        out[pending[ok]] = d * v[ok]
        pending = pending[~ok]
    return out


def sample_internal_time(kernel: GammaKernel, rng: np.random.Generator,
                         size: int | None = None):
    """Draw internal times distributed as ``tau * Gamma(n, 1)``.

    Returns a scalar when ``size`` is omitted, else an array of that length.
    """
    m = 1 if size is None else int(size)
    if m < 1:
        raise ValueError(f"size must be >= 1, got {size!r}")
    draws = kernel.tau * _gamma_variates(kernel.n, rng, m)
    if size is None:
        return float(draws[0])
    return draws


def transform_monte_carlo(signal: TimeSignal, kernel: GammaKernel,
                          samples: int, seed: int) -> MonteCarloEstimate:
    """Monte Carlo smearing: average the signal over internal-time draws.

    The estimate is the sample mean of ``F(tau * U_i)`` with
    ``U_i ~ Gamma(n, 1)`` and the reported uncertainty is the standard error
    of that mean.  Reductions run through the fixed pairwise tree, so a given
    seed reproduces the estimate bit for bit.
    """
    if samples < 2:
        raise ValueError(f"samples must be >= 2, got {samples!r}")
    _screen_convergence(signal, kernel)
    rng = np.random.default_rng(seed)
    u = _gamma_variates(kernel.n, rng, int(samples))
    values = np.asarray(signal.evaluate(kernel.tau * u))
    mean = pairwise_sum(values) / samples
    resid = values - mean
    var = float(np.real(pairwise_sum(np.abs(resid) ** 2))) / (samples - 1)
    stderr = math.sqrt(var / samples)
    if not signal.complex_valued:
        mean = float(np.real(mean))
    else:
        mean = complex(mean)
    return MonteCarloEstimate(mean, stderr)


# ---------------------------------------------------------------------------
# step schemes


@dataclass(frozen=True)
class StepScheme:
    """One-step mixing weights: ``alpha`` forward, ``beta = 1 - alpha`` backward."""

    alpha: float
    beta: float = None  # type: ignore[assignment]

    def __post_init__(self):
        alpha = float(self.alpha)
        beta = 1.0 - alpha if self.beta is None else float(self.beta)
        if not (0.0 <= alpha <= 1.0):
            raise ValueError(f"alpha must lie in [0, 1], got {alpha!r}")
        if abs(alpha + beta - 1.0) > 1e-12:
            raise ValueError(f"alpha + beta must equal 1, got {alpha + beta!r}")
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "beta", beta)


def scheme_delta_coefficient(scheme: StepScheme, n: int) -> float:
    """Signed weight ``(-alpha/beta)**n`` of the retained initial condition.

    The fully backward scheme (alpha = 0) is the only one whose n-step
    density carries no delta remnant; any forward admixture leaves a signed
    point mass at the initial time, negative for odd ``n``.
    """
    if int(n) != n or n < 1:
        raise ValueError(f"n must be an integer >= 1, got {n!r}")
    if scheme.beta == 0.0:
        raise BackwardOnly("alpha = 1 (beta = 0) has no backward component; "
                           "the delta coefficient is undefined")
    return (-scheme.alpha / scheme.beta) ** int(n)


@dataclass(frozen=True)
class SchemeDecomposition:
    """Exact n-step density split: delta remnant plus gamma mixture.

    The n-step smearing density of a mixed scheme equals
    ``delta_coefficient * delta(xi - origin)`` plus
    ``sum_j mixture_weights[j-1] * h_j(xi)`` where ``h_j`` is the gamma
    density with integer shape ``j`` and scale ``beta*tau``.  The signed
    weights always sum (with the delta coefficient) to 1.
    """

    delta_coefficient: float
    mixture_weights: np.ndarray
    shapes: np.ndarray
    scale: float

    def total_weight(self) -> float:
        return self.delta_coefficient + float(pairwise_sum(self.mixture_weights))

    def continuous_density(self, xi, origin: float = 0.0):
        """Evaluate the absolutely continuous part (the gamma mixture)."""
        xi = np.asarray(xi, dtype=float)
        s = xi - origin
        out = np.zeros_like(s)
        mask = s > 0
        if np.any(mask):
            sm = s[mask]
            acc = np.zeros_like(sm)
            for w, j in zip(self.mixture_weights, self.shapes):
                logh = ((j - 1) * np.log(sm / self.scale) - sm / self.scale
                        - gammaln(j) - math.log(self.scale))
                acc += w * np.exp(logh)
            out[mask] = acc
        return out


def scheme_density_decomposition(scheme: StepScheme,
                                 kernel: GammaKernel) -> SchemeDecomposition:
    """Decompose the n-step scheme density into delta + gamma mixture.

    Mixture weight ``j`` is ``beta**(-n) * C(n, j) * (-alpha)**(n-j)``; the
    coefficients are exact binomials, intended for moderate ``n`` (they grow
    combinatorially and are reported as floats).
    """
    if scheme.beta == 0.0:
        raise BackwardOnly("alpha = 1 (beta = 0): density decomposition "
                           "requires a backward component")
    n = kernel.n
    alpha, beta = scheme.alpha, scheme.beta
    j = np.arange(1, n + 1)
    comb = np.array([math.comb(n, int(jj)) for jj in j], dtype=float)
    weights = beta ** (-float(n)) * comb * (-alpha) ** (n - j).astype(float)
    delta = scheme_delta_coefficient(scheme, n)
    return SchemeDecomposition(delta_coefficient=delta, mixture_weights=weights,
                               shapes=j, scale=beta * kernel.tau)


@dataclass(frozen=True)
class AdvectionProbe:
    """Result of the periodic-grid advection probe."""

    min_value: float
    peak_value: float
    profile: np.ndarray
    grid: np.ndarray
    initial: np.ndarray


def advection_negativity_probe(scheme: StepScheme, kernel: GammaKernel,
                               sigma: float, domain_length: float,
                               points: int,
                               center: float | None = None) -> AdvectionProbe:
    """Apply the n-step scheme symbol to a Gaussian under pure drift.

    The generator is the unit-speed advection ``-d/dxi`` on a periodic grid,
    so each step multiplies the spectrum by
    ``((1 - i alpha tau k)/(1 + i beta tau k))**n`` and the profile drifts by
    ``n*tau`` on average.  The fully backward scheme smears the Gaussian with
    the gamma density and stays non-negative; any forward admixture produces
    genuine negative mass for sharp profiles.

    ``points`` must be a power of two.  The profile width must satisfy
    ``sigma >= 4*dx`` and the domain must cover drift plus ``20*sigma``,
    otherwise :class:`GridUnderResolved` is raised.
    """
    if points < 2 or points & (points - 1):
        raise ValueError(f"points must be a power of two, got {points!r}")
    if scheme.beta == 0.0:
        raise BackwardOnly("alpha = 1 (beta = 0) is outside the probe's family")
    n, tau = kernel.n, kernel.tau
    dx = domain_length / points
    drift = n * tau
    if sigma < 4.0 * dx:
        raise GridUnderResolved(
            f"sigma={sigma} under-resolved: needs sigma >= 4*dx = {4 * dx:.3e} "
            f"(increase points or shrink the domain)"
        )
    if domain_length < drift + 20.0 * sigma:
        raise GridUnderResolved(
            f"domain {domain_length} shorter than drift + 20 sigma = "
            f"{drift + 20 * sigma:.3e}"
        )
    if center is None:
        center = 0.5 * (domain_length - drift)
    grid = dx * np.arange(points)
    initial = np.exp(-0.5 * ((grid - center) / sigma) ** 2) / (sigma * math.sqrt(2 * math.pi))
    k = 2.0 * math.pi * np.fft.rfftfreq(points, d=dx)
    symbol = ((1.0 - 1j * scheme.alpha * tau * k)
              / (1.0 + 1j * scheme.beta * tau * k)) ** n
    evolved = np.fft.irfft(np.fft.rfft(initial) * symbol, n=points)
    return AdvectionProbe(
        min_value=float(evolved.min()),
        peak_value=float(evolved.max()),
        profile=evolved,
        grid=grid,
        initial=initial,
    )
