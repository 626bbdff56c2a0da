r"""Discrete-time quantum mechanics in the energy eigenbasis.

A state written as coefficients a_{ab} over energy eigenstates evolves, per
time quantum, by the entrywise factor ``[1 + i tau (e_a - e_b)/hbar]^{-n}``.
Diagonal (and degenerate) entries are untouched; every other coherence
shrinks by ``[1 + (tau de/hbar)^2]^{-n/2}`` per pair — exponential loss with
characteristic time ``T_d = 2 tau / log[1 + (tau de/hbar)^2]``.  Because the
factor matrix is a Gram matrix (it is the smeared average of ``e^{-i e_a t
u/hbar}`` phases), evolution is a Schur multiplier that preserves positivity
exactly; no unitary single-step generator reproduces it, and the size of
that obstruction is exposed as a phase-consistency defect.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .kernel import GammaKernel, TimeSignal, transform_quadrature

__all__ = [
    "DensityMatrix",
    "PhysicalConstants",
    "DecoherenceReport",
    "NATURAL",
    "SI_PLANCK",
    "ELECTRON_VOLT",
    "SECONDS_PER_YEAR",
    "project_density",
    "evolve_density",
    "decoherence_time",
    "offdiagonal_modulus",
    "decoherence_report",
    "gamma_equivalence_check",
    "schroedinger_defect",
]

ELECTRON_VOLT = 1.602176634e-19  # J
SECONDS_PER_YEAR = 3.15576e7  # Julian year


@dataclass(frozen=True)
class PhysicalConstants:
    """Action scale and time quantum; see :data:`NATURAL` / :data:`SI_PLANCK`."""

    hbar: float
    tau: float

    def __post_init__(self):
        for name in ("hbar", "tau"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise ValueError(f"{name} must be finite and > 0, got {v!r}")

    def phase_scale(self, delta_e) -> np.ndarray | float:
        """Dimensionless per-step phase tau * delta_e / hbar."""
        return np.asarray(delta_e, dtype=float) * (self.tau / self.hbar)


NATURAL = PhysicalConstants(hbar=1.0, tau=1.0)
# action quantum in J*s and a time quantum at the Planck scale in seconds
SI_PLANCK = PhysicalConstants(hbar=1.054571817e-34, tau=5.4e-44)


@dataclass(frozen=True)
class DensityMatrix:
    """Energy eigenvalues plus coefficient matrix; validated on construction.

    Requires Hermiticity and unit trace to 1e-12 and eigenvalues above
    -1e-10.  For almost-valid user data use :func:`project_density`, which
    clips and renormalizes instead of rejecting.
    """

    energies: np.ndarray
    coeffs: np.ndarray

    def __post_init__(self):
        e = np.atleast_1d(np.asarray(self.energies, dtype=float))
        a = np.asarray(self.coeffs, dtype=complex)
        d = e.size
        if e.ndim != 1 or d < 1:
            raise ValueError("energies must be a non-empty 1-d vector")
        if not np.all(np.isfinite(e)):
            raise ValueError("energies must be finite")
        if a.shape != (d, d):
            raise ValueError(f"coeffs must be {d}x{d}, got {a.shape}")
        if not np.all(np.isfinite(a.view(float))):
            raise ValueError("coeffs must be finite")
        herm = np.max(np.abs(a - a.conj().T))
        if herm > 1e-12:
            raise ValueError(f"coeffs not Hermitian (deviation {herm:.2e})")
        tr = a.trace()
        if abs(tr - 1.0) > 1e-12:
            raise ValueError(f"trace must be 1, got {tr!r}")
        lo = float(np.linalg.eigvalsh(0.5 * (a + a.conj().T)).min())
        if lo < -1e-10:
            raise ValueError(f"not positive semidefinite (min eigenvalue {lo:.2e})")
        e.setflags(write=False)
        a.setflags(write=False)
        object.__setattr__(self, "energies", e)
        object.__setattr__(self, "coeffs", a)

    @property
    def dim(self) -> int:
        return self.energies.size

    def purity(self) -> float:
        """trace(rho^2) = sum |a_{ab}|^2."""
        return float(np.sum(np.abs(self.coeffs) ** 2))


def project_density(energies, coeffs) -> DensityMatrix:
    """Nearest valid state: symmetrize, clip negative eigenvalues, renormalize.

    Emits a warning when the input actually needed repair.
    """
    e = np.atleast_1d(np.asarray(energies, dtype=float))
    a = np.asarray(coeffs, dtype=complex)
    if a.shape != (e.size, e.size):
        raise ValueError(f"coeffs must be {e.size}x{e.size}, got {a.shape}")
    herm = 0.5 * (a + a.conj().T)
    vals, vecs = np.linalg.eigh(herm)
    clipped = np.clip(vals, 0.0, None)
    total = clipped.sum()
    if total <= 0.0:
        raise ValueError("matrix has no positive part to normalize")
    repaired = (vecs * (clipped / total)) @ vecs.conj().T
    moved = float(np.max(np.abs(repaired - a)))
    if moved > 1e-12:
        warnings.warn(
            f"state adjusted by up to {moved:.2e} to restore "
            "positivity/unit trace", stacklevel=2)
    return DensityMatrix(e, repaired)


def _coherence_factors(energies: np.ndarray, n: int,
                       constants: PhysicalConstants) -> np.ndarray:
    """Entrywise matrix [1 + i tau (e_a - e_b)/hbar]^{-n} in polar form."""
    z = constants.phase_scale(energies[:, None] - energies[None, :])
    log_mod = -0.5 * n * np.log1p(z * z)
    phase = -n * np.arctan(z)
    return np.exp(log_mod) * (np.cos(phase) + 1j * np.sin(phase))


def _check_step(n) -> int:
    n = int(n)
    if n < 0:
        raise ValueError(f"step count must be >= 0, got {n}")
    return n


def evolve_density(dm: DensityMatrix, n: int,
                   constants: PhysicalConstants = NATURAL) -> DensityMatrix:
    """State after ``n`` time quanta.

    Entrywise ``b_{ab} = a_{ab} [1 + i tau (e_a - e_b)/hbar]^{-n}`` computed
    in polar form so arbitrarily large ``n`` neither overflows nor loses the
    phase.  ``n = 0`` returns the state unchanged (identity by convention —
    the step relation itself is stated for positive counts).  Diagonal and
    degenerate entries are exactly invariant; Hermiticity, unit trace, and
    positivity survive because the factor matrix is a Gram matrix acting as
    a Schur multiplier.
    """
    n = _check_step(n)
    if n == 0:
        return dm
    factors = _coherence_factors(dm.energies, n, constants)
    return DensityMatrix(dm.energies, dm.coeffs * factors)


def decoherence_time(delta_e, constants: PhysicalConstants = NATURAL):
    """Coherence lifetime ``2 tau / log[1 + (tau delta_e/hbar)^2]``.

    Infinite for a degenerate pair.  Accepts scalars or arrays; time is in
    the units of ``constants.tau``.
    """
    z = constants.phase_scale(delta_e)
    z2 = z * z
    with np.errstate(divide="ignore"):
        out = np.where(z2 > 0.0, 2.0 * constants.tau / np.log1p(z2), np.inf)
    return float(out) if np.ndim(delta_e) == 0 else out


def offdiagonal_modulus(n: int, delta_e,
                        constants: PhysicalConstants = NATURAL):
    """Remaining coherence fraction ``[1 + (tau delta_e/hbar)^2]^{-n/2}``.

    Equals ``exp(-n tau / T_d)`` with the lifetime from
    :func:`decoherence_time` — the identity the tests pin down.
    """
    n = _check_step(n)
    z = constants.phase_scale(delta_e)
    out = np.exp(-0.5 * n * np.log1p(z * z))
    return float(out) if np.ndim(delta_e) == 0 else out


@dataclass(frozen=True)
class DecoherenceReport:
    """Pairwise coherence decay table.

    For each eigenstate pair (row of ``pairs``): the energy gap, the
    lifetime, and the modulus of the evolved coefficient at each entry of
    ``steps``.  ``moduli[k]`` therefore is non-increasing along ``steps``,
    and the lifetime is infinite exactly for vanishing gaps.
    """

    tau: float
    pairs: np.ndarray          # (P, 2) index pairs, a < b
    energy_gaps: np.ndarray    # (P,) e_a - e_b
    lifetimes: np.ndarray      # (P,)
    steps: np.ndarray          # (K,)
    moduli: np.ndarray         # (P, K)

    def __post_init__(self):
        P, K = self.pairs.shape[0], self.steps.size
        if self.moduli.shape != (P, K) or self.energy_gaps.shape != (P,) \
                or self.lifetimes.shape != (P,):
            raise ValueError("inconsistent report array shapes")
        if np.any(np.diff(self.steps) <= 0):
            raise ValueError("steps must be strictly increasing")
        gap_zero = self.energy_gaps == 0.0
        if not np.array_equal(np.isinf(self.lifetimes), gap_zero):
            raise ValueError("lifetime must be infinite exactly at zero gap")
        if np.any(np.diff(self.moduli, axis=1) > 1e-15):
            raise ValueError("moduli must be non-increasing in n")


def decoherence_report(dm: DensityMatrix, steps,
                       constants: PhysicalConstants = NATURAL) -> DecoherenceReport:
    """Tabulated off-diagonal decay for every pair a < b at the given steps."""
    steps = np.atleast_1d(np.asarray(steps, dtype=int))
    if steps.size == 0 or np.any(steps < 0):
        raise ValueError("steps must be non-empty, non-negative")
    d = dm.dim
    idx = [(a, b) for a in range(d) for b in range(a + 1, d)]
    pairs = np.array(idx, dtype=int).reshape(-1, 2)
    gaps = np.array([dm.energies[a] - dm.energies[b] for a, b in pairs])
    lifetimes = np.array([decoherence_time(g, constants) for g in gaps])
    base = np.array([abs(dm.coeffs[a, b]) for a, b in pairs])
    decay = np.array([[offdiagonal_modulus(int(n), g, constants)
                       for n in steps] for g in gaps]).reshape(pairs.shape[0],
                                                              steps.size)
    return DecoherenceReport(tau=constants.tau, pairs=pairs, energy_gaps=gaps,
                             lifetimes=lifetimes, steps=steps,
                             moduli=base[:, None] * decay)


def gamma_equivalence_check(dm: DensityMatrix, n: int,
                            constants: PhysicalConstants = NATURAL,
                            rule=None) -> float:
    """Max entrywise gap between stepped evolution and the smeared phases.

    Every coefficient's continuous motion is a pure phase
    ``a_{ab} e^{-i (e_a - e_b) t/hbar}``; smearing it with the gamma weight
    must land exactly on the stepped factor.  Returns the largest absolute
    deviation over all entries (0 for ``n = 0``, where both sides are the
    identity)."""
    n = _check_step(n)
    if n == 0:
        return 0.0
    evolved = evolve_density(dm, n, constants).coeffs
    kernel = GammaKernel(n, constants.tau)
    worst = 0.0
    d = dm.dim
    for a in range(d):
        for b in range(d):
            coeff = dm.coeffs[a, b]
            if coeff == 0:
                continue
            omega = (dm.energies[a] - dm.energies[b]) / constants.hbar
            signal = TimeSignal(
                lambda t, c=coeff, w=omega: c * np.exp(-1j * w * np.asarray(t)),
                growth_rate=0.0, label="coherence-phase")
            res = transform_quadrature(signal, kernel, rule=rule)
            worst = max(worst, abs(res.value - evolved[a, b]))
    return worst


def schroedinger_defect(n: int, delta_e,
                        constants: PhysicalConstants = NATURAL):
    """Obstruction to a unitary per-step phase law: ``(n/2) log[1 + z^2]``.

    Matching the stepped factor with a pure phase ``e^{i g(n)}`` would need
    ``g`` to carry the imaginary part ``(n/2) log[1 + (tau delta_e/hbar)^2]``,
    which is nonzero whenever the gap is — so no such phase exists, and the
    returned value measures how badly it fails.  Strictly increasing in
    ``n`` for a fixed nonzero gap; requires ``n >= 1``.
    """
    n = int(n)
    if n < 1:
        raise ValueError(f"defect is defined for n >= 1, got {n}")
    z = constants.phase_scale(delta_e)
    out = 0.5 * n * np.log1p(z * z)
    return float(out) if np.ndim(delta_e) == 0 else out
