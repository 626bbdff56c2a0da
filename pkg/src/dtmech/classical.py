r"""Discrete-time classical mechanics: closed-form moments and an ODE route.

Phase-space observables evolve by smearing the continuous trajectory with the
gamma weight of :mod:`dtmech.kernel`.  For a free particle and a unit harmonic
oscillator the resulting means and second moments have closed forms; a generic
first-order field is handled by dense-output integration feeding the same
transform.  The quadrature route exists precisely to cross-check the closed
forms, so both produce the same :class:`MomentReport` shape.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from ._util import deterministic_map
from .errors import StiffnessFailure
from .kernel import GammaKernel, TimeSignal, TransformResult, transform_quadrature

__all__ = [
    "PhaseState",
    "FreeParticle",
    "HarmonicOscillator",
    "CustomField",
    "Trajectory",
    "MomentReport",
    "free_particle_moments",
    "sho_moments",
    "sho_moments_scaled",
    "evolve_observable",
    "quadrature_moments",
    "continuous_trajectory",
    "observable_signal",
]


@dataclass(frozen=True)
class PhaseState:
    """Deterministic initial phase-space point: positions, momenta, masses."""

    positions: np.ndarray
    momenta: np.ndarray
    masses: np.ndarray

    def __post_init__(self):
        x = np.atleast_1d(np.asarray(self.positions, dtype=float))
        p = np.atleast_1d(np.asarray(self.momenta, dtype=float))
        m = np.atleast_1d(np.asarray(self.masses, dtype=float))
        if not (x.ndim == p.ndim == m.ndim == 1):
            raise ValueError("positions, momenta, masses must be 1-d")
        if not (x.size == p.size == m.size >= 1):
            raise ValueError(
                f"lengths must match and be >= 1, got {x.size}/{p.size}/{m.size}"
            )
        if not np.all(np.isfinite(x)) or not np.all(np.isfinite(p)):
            raise ValueError("positions and momenta must be finite")
        if not np.all(m > 0) or not np.all(np.isfinite(m)):
            raise ValueError("masses must be finite and > 0")
        for name, arr in (("positions", x), ("momenta", p), ("masses", m)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def dof(self) -> int:
        return self.positions.size


class FreeParticle:
    """H = sum p_i^2 / 2 m_i: straight-line trajectories, exact closed forms."""

    analytic = True
    has_energy = True

    def trajectory(self, state: PhaseState, t_max: float = math.inf,
                   tolerance: float = 1e-10) -> "Trajectory":
        x0, p0, m = state.positions, state.momenta, state.masses
        vel = p0 / m

        def evaluate(t):
            t = np.asarray(t, dtype=float)[:, None]
            return x0 + vel * t, np.broadcast_to(p0, (t.shape[0], p0.size)).copy()

        return Trajectory(evaluate, t_max=math.inf, tolerance=0.0,
                          label="free-particle")

    def energy(self, x, p, masses):
        return 0.5 * np.sum(p * p / masses, axis=-1)


class HarmonicOscillator:
    """Unit-mass, unit-frequency oscillators: x = r sin(t + theta).

    The closed-form moment results are stated for m_i = 1, omega = 1; general
    (mass, frequency) is a rescaling handled by :func:`sho_moments_scaled`.
    """

    analytic = True
    has_energy = True

    def trajectory(self, state: PhaseState, t_max: float = math.inf,
                   tolerance: float = 1e-10) -> "Trajectory":
        _require_unit_masses(state)
        r = np.hypot(state.positions, state.momenta)
        theta = np.arctan2(state.positions, state.momenta)

        def evaluate(t):
            t = np.asarray(t, dtype=float)[:, None]
            return r * np.sin(t + theta), r * np.cos(t + theta)

        return Trajectory(evaluate, t_max=math.inf, tolerance=0.0,
                          label="oscillator")

    def energy(self, x, p, masses):
        return 0.5 * np.sum(x * x + p * p, axis=-1)


class CustomField:
    """General autonomous first-order system dx/dt = field(x).

    ``field`` maps a coordinate vector to its time derivative.  There is no
    momentum channel: trajectories report zeros for momenta, and no energy is
    defined.  The field must be smooth enough for adaptive step control; a
    collapse of the step size surfaces as :class:`StiffnessFailure`.
    """

    analytic = False
    has_energy = False

    def __init__(self, field):
        self.field = field

    def trajectory(self, state: PhaseState, t_max: float,
                   tolerance: float = 1e-10) -> "Trajectory":
        return _integrate_field(self.field, state.positions, t_max, tolerance)

    def energy(self, x, p, masses):
        return np.full(np.asarray(x).shape[:-1], np.nan)


def _require_unit_masses(state: PhaseState) -> None:
    if not np.allclose(state.masses, 1.0, rtol=0.0, atol=1e-12):
        raise ValueError(
            "oscillator closed forms assume unit masses; "
            "rescale general (mass, frequency) via sho_moments_scaled"
        )


class Trajectory:
    """Continuous solution with batch evaluation and growth on demand.

    ``state_at(times)`` returns ``(positions, momenta)`` arrays of shape
    ``(len(times), dof)``.  Evaluation never extrapolates: an integrated
    solution asked beyond its current horizon re-solves to a larger one
    (1.5x the requested time) when a grower is attached, and raises
    otherwise.  ``steps`` records the integrator's accepted time points
    (empty for closed-form trajectories).
    """

    def __init__(self, evaluate, t_max: float, tolerance: float, label: str,
                 steps: np.ndarray | None = None, grower=None):
        self._evaluate = evaluate
        self.t_max = float(t_max)
        self.tolerance = float(tolerance)
        self.label = label
        self.steps = np.empty(0) if steps is None else steps
        self._grower = grower

    def state_at(self, times):
        t = np.atleast_1d(np.asarray(times, dtype=float))
        if np.any(t < 0.0):
            raise ValueError("trajectories are defined for t >= 0 only")
        t_need = float(t.max(initial=0.0))
        if t_need > self.t_max:
            if self._grower is None:
                raise ValueError(
                    f"trajectory '{self.label}' covers [0, {self.t_max}] "
                    f"but t = {t_need} was requested"
                )
            fresh = self._grower(1.5 * t_need)
            self._evaluate = fresh._evaluate
            self.t_max = fresh.t_max
            self.steps = fresh.steps
        return self._evaluate(t)


def _integrate_field(fieldfn, y0, t_max: float, tolerance: float) -> Trajectory:
    if not (t_max > 0.0 and math.isfinite(t_max)):
        raise ValueError(f"t_max must be finite and > 0, got {t_max!r}")
    sol = solve_ivp(lambda t, y: np.asarray(fieldfn(y), dtype=float),
                    (0.0, t_max), y0, method="DOP853", dense_output=True,
                    rtol=tolerance, atol=tolerance * 1e-2)
    if not sol.success:
        raise StiffnessFailure(
            f"integration stalled before t={t_max}: {sol.message}"
        )

    dof = y0.size

    def evaluate(t):
        x = sol.sol(t).T.reshape(t.size, dof)
        return x, np.zeros((t.size, dof))

    return Trajectory(
        evaluate, t_max=t_max, tolerance=tolerance, label="integrated-field",
        steps=sol.t,
        grower=lambda bigger: _integrate_field(fieldfn, y0, bigger, tolerance),
    )


def continuous_trajectory(model, state: PhaseState, t_max: float,
                          tolerance: float = 1e-10) -> Trajectory:
    """Continuous-time solution for the model from the given initial state.

    Closed forms for the analytic models (any horizon, zero error); adaptive
    high-order Runge--Kutta with dense output for :class:`CustomField`.
    """
    return model.trajectory(state, t_max=t_max, tolerance=tolerance)


# ---------------------------------------------------------------------------
# moment reports


@dataclass(frozen=True)
class MomentReport:
    """Means, second moments, and energy over steps ``n = 0..N``.

    ``mean_positions``/``mean_momenta`` have shape ``(N+1, l)``;
    ``second_positions``/``second_momenta`` hold the full symmetric matrices
    of pair moments, shape ``(N+1, l, l)`` (their diagonals are the squared
    observables' means); ``energy`` has shape ``(N+1,)`` and is NaN when the
    model defines no Hamiltonian.
    """

    tau: float
    steps: np.ndarray
    mean_positions: np.ndarray
    mean_momenta: np.ndarray
    second_positions: np.ndarray
    second_momenta: np.ndarray
    energy: np.ndarray
    source: str = "closed-form"

    def __post_init__(self):
        rows = self.steps.size
        l = self.mean_positions.shape[1] if self.mean_positions.ndim == 2 else -1
        ok = (self.mean_positions.shape == (rows, l)
              and self.mean_momenta.shape == (rows, l)
              and self.second_positions.shape == (rows, l, l)
              and self.second_momenta.shape == (rows, l, l)
              and self.energy.shape == (rows,))
        if not ok:
            raise ValueError("inconsistent report array shapes")

    @property
    def dof(self) -> int:
        return self.mean_positions.shape[1]

    def position_variances(self) -> np.ndarray:
        return self._variances(self.second_positions, self.mean_positions)

    def momentum_variances(self) -> np.ndarray:
        return self._variances(self.second_momenta, self.mean_momenta)

    def position_covariances(self) -> np.ndarray:
        return self.second_positions - (self.mean_positions[:, :, None]
                                        * self.mean_positions[:, None, :])

    @staticmethod
    def _variances(second, mean):
        raw = np.einsum("nii->ni", second) - mean ** 2
        scale = np.maximum(np.einsum("nii->ni", np.abs(second)), 1.0)
        # snap round-off negatives (within the numerical floor) to zero,
        # leave anything genuinely negative visible
        return np.where((raw < 0) & (raw > -1e-12 * scale), 0.0, raw)

    def column_names(self) -> list[str]:
        l = self.dof
        names = ["n"]
        names += [f"mean_x{i}" for i in range(l)]
        names += [f"mean_p{i}" for i in range(l)]
        names += [f"xx_{i}_{j}" for i in range(l) for j in range(i, l)]
        names += [f"pp_{i}_{j}" for i in range(l) for j in range(i, l)]
        names.append("energy")
        return names

    def rows(self):
        """Wide rows matching :meth:`column_names`, ordered by (n, i, j)."""
        l = self.dof
        pairs = [(i, j) for i in range(l) for j in range(i, l)]
        for k, n in enumerate(self.steps):
            row = [int(n)]
            row += [float(v) for v in self.mean_positions[k]]
            row += [float(v) for v in self.mean_momenta[k]]
            row += [float(self.second_positions[k, i, j]) for i, j in pairs]
            row += [float(self.second_momenta[k, i, j]) for i, j in pairs]
            row.append(float(self.energy[k]))
            yield row


def _step_range(kernel: GammaKernel, steps: int | None) -> np.ndarray:
    last = kernel.n if steps is None else int(steps)
    if last < 0:
        raise ValueError(f"steps must be >= 0, got {steps!r}")
    return np.arange(last + 1)


def free_particle_moments(state: PhaseState, kernel: GammaKernel,
                          steps: int | None = None) -> MomentReport:
    """Closed-form free-particle report over ``n = 0..steps``.

    Means drift ballistically while Var(x_i) grows exactly linearly,
    ``n tau^2 p_i^2 / m_i^2`` — diffusive spreading with
    ``D_i = p_i^2 tau / m_i^2``; momenta carry no spread at all.
    """
    n = _step_range(kernel, steps)[:, None]
    tau = kernel.tau
    x0, p0, m = state.positions, state.momenta, state.masses
    mean_x = x0 + p0 * n * tau / m
    mean_p = np.broadcast_to(p0, mean_x.shape).copy()
    cov = (n * tau * tau)[:, :, None] * np.outer(p0 / m, p0 / m)
    second_x = mean_x[:, :, None] * mean_x[:, None, :] + cov
    second_p = np.broadcast_to(np.outer(p0, p0), cov.shape).copy()
    energy = np.full(n.size, float(np.sum(p0 * p0 / (2.0 * m))))
    return MomentReport(tau=tau, steps=n[:, 0], mean_positions=mean_x,
                        mean_momenta=mean_p, second_positions=second_x,
                        second_momenta=second_p, energy=energy)


def sho_moments(state: PhaseState, kernel: GammaKernel,
                steps: int | None = None) -> MomentReport:
    """Closed-form unit-oscillator report over ``n = 0..steps``.

    With ``r_i = hypot(x_i, p_i)``, ``theta_i = atan2(x_i, p_i)``,
    ``phi = arctan tau`` and ``phi2 = arctan 2 tau``:

    - means rotate and damp: ``<x_i> = r_i (1+tau^2)^(-n/2) sin(n phi + theta_i)``
      and the cosine analogue for momenta;
    - pair moments mix a static and a damped rotating part:
      ``<x_i x_j> = (r_i r_j / 2)[cos(theta_i - theta_j)
      - (1+4 tau^2)^(-n/2) cos(n phi2 + theta_i + theta_j)]``,
      with ``+`` in place of ``-`` for momenta.

    Both reduce to the deterministic values at ``n = 0`` and conserve
    ``<x_i^2> + <p_i^2> = r_i^2`` exactly.  A zero-amplitude component
    (``r_i = 0``) has no defined angle; its moments are identically zero,
    which the formulas deliver on their own via ``atan2(0, 0) = 0``.

    Requires unit masses (the closed forms are stated in those units); use
    :func:`sho_moments_scaled` for general mass and frequency.
    """
    _require_unit_masses(state)
    n = _step_range(kernel, steps)[:, None]
    tau = kernel.tau
    r = np.hypot(state.positions, state.momenta)
    theta = np.arctan2(state.positions, state.momenta)
    phi = math.atan(tau)
    phi2 = math.atan(2.0 * tau)
    damp1 = np.exp(-0.5 * n * math.log1p(tau * tau))
    damp2 = np.exp(-0.5 * n * math.log1p(4.0 * tau * tau))
    mean_x = r * damp1 * np.sin(n * phi + theta)
    mean_p = r * damp1 * np.cos(n * phi + theta)
    rr = 0.5 * np.outer(r, r)
    static = np.cos(theta[:, None] - theta[None, :])
    rot = np.cos(n[:, :, None] * phi2 + theta[:, None] + theta[None, :])
    second_x = rr * (static - damp2[:, :, None] * rot)
    second_p = rr * (static + damp2[:, :, None] * rot)
    energy = np.full(n.size, float(0.5 * np.sum(r * r)))
    return MomentReport(tau=tau, steps=n[:, 0], mean_positions=mean_x,
                        mean_momenta=mean_p, second_positions=second_x,
                        second_momenta=second_p, energy=energy)


def sho_moments_scaled(state: PhaseState, kernel: GammaKernel,
                       omega: float = 1.0,
                       steps: int | None = None) -> MomentReport:
    """Oscillator report for general masses and a common frequency.

    H = sum p_i^2/2m_i + m_i omega^2 x_i^2 / 2.  Rescaling
    ``X = x sqrt(m omega)``, ``P = p / sqrt(m omega)`` and measuring time in
    units of ``1/omega`` (so the time quantum becomes ``omega tau``) reduces
    the system to the unit form; the report is mapped back afterwards.
    Different frequencies per component are not supported — the cross-moment
    closed form is only established for a common frequency.
    """
    if not (omega > 0 and math.isfinite(omega)):
        raise ValueError(f"omega must be finite and > 0, got {omega!r}")
    scale = np.sqrt(state.masses * omega)
    unit_state = PhaseState(state.positions * scale, state.momenta / scale,
                            np.ones(state.dof))
    unit_kernel = GammaKernel(kernel.n, kernel.tau * omega)
    rep = sho_moments(unit_state, unit_kernel, steps=steps)
    inv = 1.0 / scale
    mean_x = rep.mean_positions * inv
    mean_p = rep.mean_momenta * scale
    second_x = rep.second_positions * np.outer(inv, inv)
    second_p = rep.second_momenta * np.outer(scale, scale)
    # H = omega * (unit-system energy), constant over n
    energy = rep.energy * omega
    return MomentReport(tau=kernel.tau, steps=rep.steps, mean_positions=mean_x,
                        mean_momenta=mean_p, second_positions=second_x,
                        second_momenta=second_p, energy=energy)


# ---------------------------------------------------------------------------
# quadrature route


def observable_signal(trajectory: Trajectory, func,
                      growth_rate: float | None = None,
                      label: str = "observable") -> TimeSignal:
    """Time signal t -> func(x(t), p(t)) along a trajectory.

    ``func`` must be vectorized over the leading axis: it receives arrays of
    shape ``(m, dof)`` and returns shape ``(m,)``.  Without a declared growth
    rate the transform's divergence screening probes the signal far beyond
    the weight's bulk, growing the trajectory as needed.
    """

    def evaluate(t):
        x, p = trajectory.state_at(np.atleast_1d(t))
        return np.asarray(func(x, p))

    return TimeSignal(evaluate, growth_rate=growth_rate, label=label)


def evolve_observable(model, state: PhaseState, func, kernel: GammaKernel,
                      steps: int | None = None, growth_rate: float | None = None,
                      threads: int | None = None) -> np.ndarray:
    """Smeared observable values over ``n = 0..steps``.

    Row ``n`` is the gamma transform (at step count ``n``) of the signal
    ``t -> func(x(t), p(t))``; row 0 is the deterministic initial value.
    Transforms for different ``n`` are independent and may run on a thread
    pool; the output ordering and values do not depend on the thread count.
    """
    n_values = _step_range(kernel, steps)
    t_span = kernel.tau * (n_values[-1] + 12.0 * math.sqrt(n_values[-1] + 1.0) + 80.0)
    trajectory = model.trajectory(state, t_max=t_span)
    signal = observable_signal(trajectory, func, growth_rate=growth_rate)
    x0 = state.positions[None, :]
    p0 = state.momenta[None, :]
    first = float(np.asarray(func(x0, p0)).reshape(()))

    def one(n: int) -> float:
        if n == 0:
            return first
        res = transform_quadrature(signal, GammaKernel(int(n), kernel.tau))
        return float(res.value)

    if threads is not None and threads > 1 and not model.analytic:
        # an ODE-backed trajectory grows in place when probed beyond its
        # horizon, which is not safe to trigger from several threads at once;
        # prime it once to the farthest time the screening probe can ask for
        far = 2.0 * kernel.tau * (n_values[-1] + 10.0 * math.sqrt(n_values[-1] + 1.0) + 51.0)
        trajectory.state_at(far)
    values = deterministic_map(one, [int(n) for n in n_values], threads=threads)
    return np.asarray(values)


def quadrature_moments(model, state: PhaseState, kernel: GammaKernel,
                       steps: int | None = None,
                       threads: int | None = None) -> MomentReport:
    """Moment report computed entirely through the quadrature route.

    Exists to cross-check the closed forms: every mean and pair moment is an
    independent gamma transform of the corresponding product along the
    continuous trajectory.
    """
    n_values = _step_range(kernel, steps)
    rows = n_values.size
    l = state.dof
    mean_x = np.empty((rows, l))
    mean_p = np.empty((rows, l))
    second_x = np.empty((rows, l, l))
    second_p = np.empty((rows, l, l))

    def pick(i):
        return lambda x, p: x[..., i]

    def pick_p(i):
        return lambda x, p: p[..., i]

    def pair_x(i, j):
        return lambda x, p: x[..., i] * x[..., j]

    def pair_p(i, j):
        return lambda x, p: p[..., i] * p[..., j]

    for i in range(l):
        mean_x[:, i] = evolve_observable(model, state, pick(i), kernel,
                                         steps=steps, threads=threads)
        mean_p[:, i] = evolve_observable(model, state, pick_p(i), kernel,
                                         steps=steps, threads=threads)
    for i in range(l):
        for j in range(i, l):
            vx = evolve_observable(model, state, pair_x(i, j), kernel,
                                   steps=steps, threads=threads)
            vp = evolve_observable(model, state, pair_p(i, j), kernel,
                                   steps=steps, threads=threads)
            second_x[:, i, j] = second_x[:, j, i] = vx
            second_p[:, i, j] = second_p[:, j, i] = vp
    if getattr(model, "has_energy", True):
        energy = evolve_observable(
            model, state, lambda x, p: model.energy(x, p, state.masses),
            kernel, steps=steps, threads=threads)
    else:
        energy = np.full(rows, np.nan)
    return MomentReport(tau=kernel.tau, steps=n_values, mean_positions=mean_x,
                        mean_momenta=mean_p, second_positions=second_x,
                        second_momenta=second_p, energy=energy,
                        source="quadrature")
