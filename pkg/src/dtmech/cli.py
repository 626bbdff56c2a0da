"""Command-line interface to the discrete-evolution toolkit.

Subcommands map onto the library's functional areas:

* ``transform`` — smear a time signal over the internal-time distribution
  (quadrature or seeded Monte Carlo);
* ``classical`` — moment reports for free particles and oscillator chains,
  by closed form or through the quadrature route;
* ``quantum td|evolve|equivalence|defect`` — decoherence times, density
  matrix evolution, cross-route agreement, and the per-step defect;
* ``chaos ct|dt`` — sensitivity curves and growth-rate fits for the
  chaotic benchmark map, continuous and discrete;
* ``alpha-scan`` — delta remnants and negativity minima across mixed
  stepping schemes.

Exit codes: 0 on success, 2 for configuration problems (bad flags, bad
files, invalid physics inputs), 3 when a numerical method honestly fails
(quadrature breakdown, unstable fit, divergent transform).  Every failure
prints exactly one ``ErrorName: message`` line on stderr.

Determinism: the payload (CSV rows / JSON ``data``) is a pure function of
the configuration and seed.  Monte Carlo runs derive an independent
generator per step count from ``(seed, n)``, so results are identical for
any ``--threads`` value, byte for byte.  Metadata (timestamp and friends)
lives only in the ``#`` preamble / ``meta`` key and never touches payload
bytes.

Configuration files: ``--config FILE`` loads a JSON object whose keys are
flag names (dashes or underscores); explicit command-line flags override
file values, which override built-in defaults.

Units: with ``--preset si-planck``, energies require an explicit suffix
(``meV``, ``eV``, ``J``) and time horizons require ``s`` or ``yr`` — bare
dimensioned numbers are rejected.  With the default natural-units preset,
inputs are bare numbers and unit suffixes are rejected instead.
"""

from __future__ import annotations

import argparse
import json
import os
import re
import sys

import numpy as np

from . import __version__
from ._util import deterministic_map, resolve_thread_count
from .classical import (FreeParticle, HarmonicOscillator, PhaseState,
                        free_particle_moments, quadrature_moments,
                        sho_moments, sho_moments_scaled)
from .errors import NumericalError
from .kernel import (GammaKernel, QuadratureRule, StepScheme,
                     advection_negativity_probe, complex_exponential_signal,
                     constant_signal, cosine_signal, exponential_signal,
                     monomial_signal, scheme_delta_coefficient,
                     tabulated_signal, transform_monte_carlo,
                     transform_quadrature)
from .nonlinear import (SensitivityModel, ct_distance, ct_lyapunov,
                        dt_distance, dt_lyapunov)
from .quantum import (NATURAL, SECONDS_PER_YEAR, SI_PLANCK, DensityMatrix,
                      decoherence_time, evolve_density,
                      gamma_equivalence_check, project_density,
                      schroedinger_defect)
from .report import build_meta, render_csv, render_json, write_report


class ConfigError(ValueError):
    """Bad flags, files, or parameter combinations; exits with code 2."""


class _Parser(argparse.ArgumentParser):
    """Parser that reports usage problems as ConfigError (one line, exit 2)."""

    def error(self, message):
        raise ConfigError(message)


_PRESETS = {"natural": NATURAL, "si-planck": SI_PLANCK}
_ELECTRON_VOLT = 1.602176634e-19
_ENERGY_UNITS = {"meV": 1e-3 * _ELECTRON_VOLT, "eV": _ELECTRON_VOLT, "J": 1.0}
_TIME_UNITS = {"s": 1.0, "yr": SECONDS_PER_YEAR}
_NUMBER_UNIT = re.compile(
    r"\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*([A-Za-z]*)\s*$")


def _split_number_unit(text: str, what: str) -> tuple[float, str]:
    m = _NUMBER_UNIT.match(str(text))
    if not m:
        raise ConfigError(f"cannot parse {what} {text!r}")
    return float(m.group(1)), m.group(2)


def _parse_energy(text: str, si: bool) -> float:
    """Energy input: bare number in natural units, suffixed in SI."""
    value, unit = _split_number_unit(text, "energy")
    if si:
        if not unit:
            raise ConfigError(
                f"energy {text!r} needs a unit suffix (meV, eV, J) "
                "with --preset si-planck")
        if unit not in _ENERGY_UNITS:
            raise ConfigError(f"unknown energy unit {unit!r} in {text!r} "
                              "(use meV, eV, or J)")
        return value * _ENERGY_UNITS[unit]
    if unit:
        raise ConfigError(f"unit suffix {unit!r} in {text!r} is only "
                          "accepted with --preset si-planck")
    return value


def _parse_time(text: str, si: bool) -> float:
    """Time input: bare number in natural units, s/yr suffixed in SI."""
    value, unit = _split_number_unit(text, "time")
    if si:
        if not unit:
            raise ConfigError(f"time {text!r} needs a unit suffix (s, yr) "
                              "with --preset si-planck")
        if unit not in _TIME_UNITS:
            raise ConfigError(f"unknown time unit {unit!r} in {text!r} "
                              "(use s or yr)")
        return value * _TIME_UNITS[unit]
    if unit:
        raise ConfigError(f"unit suffix {unit!r} in {text!r} is only "
                          "accepted with --preset si-planck")
    return value


def _need(args, dest: str, flag: str):
    value = getattr(args, dest)
    if value is None:
        raise ConfigError(f"{flag} is required")
    return value


def _float_list(text: str, flag: str) -> np.ndarray:
    try:
        values = [float(part) for part in str(text).split(",") if part.strip()]
    except ValueError:
        raise ConfigError(f"{flag}: expected comma-separated numbers, "
                          f"got {text!r}") from None
    if not values:
        raise ConfigError(f"{flag}: no values given")
    return np.asarray(values)


def _step_list(args) -> list[int]:
    """Resolve --n / --n-range into an explicit list of step counts."""
    if args.n is not None and args.n_range is not None:
        raise ConfigError("give either --n or --n-range, not both")
    if args.n is not None:
        return [int(args.n)]
    if args.n_range is not None:
        m = re.fullmatch(r"\s*(\d+)\s*:\s*(\d+)\s*", str(args.n_range))
        if not m:
            raise ConfigError(f"bad --n-range {args.n_range!r}; expected LO:HI")
        lo, hi = int(m.group(1)), int(m.group(2))
        if hi < lo:
            raise ConfigError(f"empty --n-range {args.n_range!r}")
        return list(range(lo, hi + 1))
    raise ConfigError("one of --n / --n-range is required")


def _constants(args):
    name = getattr(args, "preset", "natural")
    if name not in _PRESETS:
        raise ConfigError(f"unknown preset {name!r}")
    return _PRESETS[name], name == "si-planck"


# ---------------------------------------------------------------------------
# signal construction (transform)


def _read_table(path: str):
    """Tabulated signal from a two-column CSV (optional header line)."""
    import csv as _csv
    with open(path, newline="") as handle:
        raw = [row for row in _csv.reader(handle)
               if row and not row[0].lstrip().startswith("#")]
    if not raw:
        raise ConfigError(f"{path}: no data rows")
    start = 0
    try:
        float(raw[0][0])
    except (ValueError, IndexError):
        start = 1  # header line
    data = []
    for row in raw[start:]:
        if len(row) < 2:
            raise ConfigError(f"{path}: rows need two columns (t, value)")
        data.append((float(row[0]), float(row[1])))
    if not data:
        raise ConfigError(f"{path}: no data rows after the header")
    arr = np.asarray(data)
    return tabulated_signal(arr[:, 0], arr[:, 1])


def _build_signal(args):
    kind = _need(args, "signal", "--signal")
    if kind == "const":
        return constant_signal(args.value)
    if kind == "poly":
        return monomial_signal(args.degree)
    if kind == "cos":
        return cosine_signal(args.omega)
    if kind == "cexp":
        return complex_exponential_signal(args.omega)
    if kind == "exp":
        return exponential_signal(args.rate, args.value)
    if kind == "table":
        return _read_table(_need(args, "table", "--table"))
    raise ConfigError(f"unknown signal {kind!r}")


# ---------------------------------------------------------------------------
# subcommand handlers: each returns (payload, extra_meta)


def _cmd_transform(args):
    signal = _build_signal(args)
    steps = _step_list(args)
    tau = args.tau
    threads = resolve_thread_count(args.threads)

    if args.method == "monte-carlo":
        if args.seed is None:
            # draw one, and surface it in the metadata for reruns
            args.seed = int.from_bytes(os.urandom(8), "big")
        seed, samples = args.seed, args.samples

        def one(n):
            est = transform_monte_carlo(signal, GammaKernel(n, tau),
                                        samples, (seed, n))
            return (n, est.estimate, est.standard_error, samples,
                    "monte-carlo")

        results = deterministic_map(one, steps, threads=threads)
    else:
        results = []
        for n in steps:
            kern = GammaKernel(n, tau)
            rule = QuadratureRule.for_kernel(kern, node_count=args.nodes,
                                             error_target=args.error_target)
            r = transform_quadrature(signal, kern, rule=rule)
            results.append((n, r.value, r.error, r.node_count, r.method))

    if signal.complex_valued:
        columns = ["n", "value_re", "value_im", "error", "evaluations",
                   "method"]
        rows = [[n, complex(v).real, complex(v).imag, e, m, meth]
                for (n, v, e, m, meth) in results]
    else:
        columns = ["n", "value", "error", "evaluations", "method"]
        rows = [[n, float(np.real(v)), e, m, meth]
                for (n, v, e, m, meth) in results]
    return {"columns": columns, "rows": rows}, {}


def _cmd_classical(args):
    positions = _float_list(_need(args, "x", "--x"), "--x")
    momenta = _float_list(_need(args, "p", "--p"), "--p")
    if args.mass is None:
        masses = np.ones(positions.size)
    else:
        masses = _float_list(args.mass, "--mass")
    state = PhaseState(positions, momenta, masses)
    last = int(_need(args, "n", "--n"))
    if last < 0:
        raise ConfigError(f"--n must be >= 0, got {last}")
    kern = GammaKernel(max(1, last), args.tau)
    threads = resolve_thread_count(args.threads)

    if args.model == "free":
        if args.route == "closed":
            report = free_particle_moments(state, kern, steps=last)
        else:
            report = quadrature_moments(FreeParticle(), state, kern,
                                        steps=last, threads=threads)
    else:
        if args.route == "closed":
            unit = args.omega == 1.0 and bool(np.all(masses == 1.0))
            if unit:
                report = sho_moments(state, kern, steps=last)
            else:
                report = sho_moments_scaled(state, kern, omega=args.omega,
                                            steps=last)
        else:
            if args.omega != 1.0:
                raise ConfigError("the quadrature route supports omega = 1 "
                                  "only; use --route closed for scaled "
                                  "oscillators")
            report = quadrature_moments(HarmonicOscillator(), state, kern,
                                        steps=last, threads=threads)

    columns = ["n", "i", "j", "moment", "value"]
    rows = []
    dof = report.dof
    for k, n in enumerate(report.steps):
        n = int(n)
        for i in range(dof):
            rows.append([n, i, None, "mean_x", float(report.mean_positions[k, i])])
        for i in range(dof):
            rows.append([n, i, None, "mean_p", float(report.mean_momenta[k, i])])
        for i in range(dof):
            for j in range(i, dof):
                rows.append([n, i, j, "second_x",
                             float(report.second_positions[k, i, j])])
        for i in range(dof):
            for j in range(i, dof):
                rows.append([n, i, j, "second_p",
                             float(report.second_momenta[k, i, j])])
        rows.append([n, None, None, "energy", float(report.energy[k])])
    return {"columns": columns, "rows": rows}, {"source": report.source}


def _read_density(path: str, repair: bool) -> DensityMatrix:
    """Load a density matrix from JSON: energies[], re[][], im[][].

    Accepts either the bare object or a full report document with the
    object under ``data``.
    """
    with open(path) as handle:
        doc = json.load(handle)
    if isinstance(doc, dict) and "data" in doc and isinstance(doc["data"], dict):
        doc = doc["data"]
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: expected a JSON object with "
                          "energies/re/im")
    try:
        energies = np.asarray(doc["energies"], dtype=float)
        real = np.asarray(doc["re"], dtype=float)
        imag = np.asarray(doc["im"], dtype=float)
    except KeyError as exc:
        raise ConfigError(f"{path}: missing field {exc.args[0]!r}") from None
    coeffs = real + 1j * imag
    if repair:
        return project_density(energies, coeffs)
    return DensityMatrix(energies, coeffs)


def _density_document(dm: DensityMatrix) -> dict:
    return {"energies": dm.energies, "re": dm.coeffs.real,
            "im": dm.coeffs.imag}


def _cmd_quantum_td(args):
    consts, si = _constants(args)
    texts = args.delta_e
    if not texts:
        raise ConfigError("--delta-e is required (repeat for several gaps)")
    horizon_text = args.horizon
    rows = []
    if si:
        horizon = _parse_time(horizon_text or "1e10yr", True)
        flag_column = ("exceeds_1e10_years" if horizon_text is None
                       else "exceeds_horizon")
        columns = ["delta_e_joules", "t_d_seconds", "t_d_years", flag_column]
        for text in texts:
            gap = _parse_energy(text, True)
            t_d = float(decoherence_time(gap, consts))
            rows.append([gap, t_d, t_d / SECONDS_PER_YEAR, t_d > horizon])
    else:
        columns = ["delta_e", "t_d"]
        horizon = None
        if horizon_text is not None:
            horizon = _parse_time(horizon_text, False)
            columns.append("exceeds_horizon")
        for text in texts:
            gap = _parse_energy(text, False)
            t_d = float(decoherence_time(gap, consts))
            row = [gap, t_d]
            if horizon is not None:
                row.append(t_d > horizon)
            rows.append(row)
    return {"columns": columns, "rows": rows}, {}


def _cmd_quantum_evolve(args):
    consts, _ = _constants(args)
    dm = _read_density(_need(args, "state", "--state"), args.repair)
    n = int(_need(args, "n", "--n"))
    if n < 0:
        raise ConfigError(f"--n must be >= 0, got {n}")
    evolved = evolve_density(dm, n, consts)
    extra = {"dim": evolved.dim, "purity": evolved.purity()}
    return {"document": _density_document(evolved)}, extra


def _cmd_quantum_equivalence(args):
    consts, _ = _constants(args)
    dm = _read_density(_need(args, "state", "--state"), args.repair)
    rows = [[n, gamma_equivalence_check(dm, n, consts)]
            for n in _step_list(args)]
    return ({"columns": ["n", "max_deviation"], "rows": rows},
            {"dim": dm.dim})


def _cmd_quantum_defect(args):
    consts, si = _constants(args)
    texts = args.delta_e
    if not texts:
        raise ConfigError("--delta-e is required (repeat for several gaps)")
    gaps = [_parse_energy(text, si) for text in texts]
    rows = [[n, gap, float(schroedinger_defect(n, gap, consts))]
            for gap in gaps for n in _step_list(args)]
    return {"columns": ["n", "delta_e", "defect"], "rows": rows}, {}


def _fit_meta(est) -> dict:
    return {"exponent": est.exponent, "intercept": est.intercept,
            "window": list(est.window), "residual": est.residual,
            "samples": est.samples}


def _cmd_chaos_ct(args):
    model = SensitivityModel(_need(args, "a", "--a"), args.c)
    t_max = _need(args, "t_max", "--t-max")
    if not (t_max > 0):
        raise ConfigError(f"--t-max must be > 0, got {t_max!r}")
    grid = np.linspace(0.0, t_max, args.grid)
    distances = ct_distance(model, grid)
    extra = {}
    line = np.full(grid.size, None, dtype=object)
    if not args.no_fit:
        est = ct_lyapunov(model, t_max, samples=args.fit_samples)
        extra["fit"] = _fit_meta(est)
        line = np.exp(est.intercept + est.exponent * grid)
    rows = [[float(t), float(d), None if f is None else float(f)]
            for t, d, f in zip(grid, distances, line)]
    return ({"columns": ["n_or_t", "distance", "fitted_line"], "rows": rows},
            extra)


def _cmd_chaos_dt(args):
    model = SensitivityModel(_need(args, "a", "--a"), args.c)
    tau = _need(args, "tau", "--tau")
    n_max = int(_need(args, "n_max", "--n-max"))
    if n_max < 1:
        raise ConfigError(f"--n-max must be >= 1, got {n_max}")
    steps = np.arange(1, n_max + 1)
    distances = [dt_distance(model, GammaKernel(int(n), tau)) for n in steps]
    extra = {}
    line = [None] * len(steps)
    if not args.no_fit:
        est = dt_lyapunov(model, GammaKernel(n_max, tau), n_max)
        extra["fit"] = _fit_meta(est)
        line = np.exp(est.intercept + est.exponent * steps * tau)
    rows = [[int(n), float(d), None if f is None else float(f)]
            for n, d, f in zip(steps, distances, line)]
    return ({"columns": ["n_or_t", "distance", "fitted_line"], "rows": rows},
            extra)


def _cmd_alpha_scan(args):
    try:
        alphas = [float(part) for part in str(args.alphas).split(",")
                  if part.strip()]
    except ValueError:
        raise ConfigError(f"--alphas: expected comma-separated numbers, "
                          f"got {args.alphas!r}") from None
    if not alphas:
        raise ConfigError("--alphas: no values given")
    n_max = int(_need(args, "n_max", "--n-max"))
    if n_max < 1:
        raise ConfigError(f"--n-max must be >= 1, got {n_max}")
    rows = []
    for alpha in alphas:
        scheme = StepScheme(alpha)
        for n in range(1, n_max + 1):
            kern = GammaKernel(n, args.tau)
            delta = scheme_delta_coefficient(scheme, n)
            probe = advection_negativity_probe(scheme, kern, args.sigma,
                                               args.length, args.points)
            rows.append([alpha, n, delta, probe.min_value])
    return ({"columns": ["alpha", "n", "delta_coeff", "grid_min"],
             "rows": rows}, {})


# ---------------------------------------------------------------------------
# parser assembly and config-file merging


def _add_step_flags(parser):
    parser.add_argument("--n", type=int, default=None,
                        help="single step count")
    parser.add_argument("--n-range", metavar="LO:HI", default=None,
                        help="inclusive range of step counts")


def _common_parent() -> _Parser:
    """Fresh shared-flag parent per subcommand.

    argparse ``parents`` shares the underlying action objects, so a single
    parent instance would let one subcommand's ``set_defaults`` (or a config
    file applied to it) leak defaults into every other subcommand.  Each
    leaf therefore gets its own copy.
    """
    p = _Parser(add_help=False)
    p.add_argument("--output", metavar="PATH", default=None,
                   help="write the report here (atomic); default stdout")
    p.add_argument("--format", choices=("csv", "json"), default="csv",
                   help="report format (default csv)")
    p.add_argument("--seed", type=int, default=None,
                   help="random seed; recorded in the metadata")
    p.add_argument("--threads", type=int, default=None,
                   help="worker threads (default: DTMECH_THREADS or 1)")
    p.add_argument("--config", metavar="PATH", default=None,
                   help="JSON object of flag defaults; flags override")
    return p


def _preset_parent() -> _Parser:
    p = _Parser(add_help=False)
    p.add_argument("--preset", choices=sorted(_PRESETS), default="natural",
                   help="constants: natural (hbar=tau=1) or si-planck")
    return p


def build_parser() -> tuple[_Parser, list]:
    parser = _Parser(prog="dtmech",
                     description="discrete-evolution toolkit command line")
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {__version__}")
    subs = parser.add_subparsers(dest="command", required=True,
                                 metavar="COMMAND")
    leaves = []

    t = subs.add_parser("transform", parents=[_common_parent()],
                        help="smear a time signal over internal time")
    t.add_argument("--signal", choices=("const", "poly", "cos", "cexp",
                                        "exp", "table"), default=None,
                   help="signal family")
    t.add_argument("--value", type=float, default=1.0,
                   help="amplitude for const/exp (default 1)")
    t.add_argument("--degree", type=int, default=1,
                   help="power for poly (default 1)")
    t.add_argument("--omega", type=float, default=1.0,
                   help="frequency for cos/cexp (default 1)")
    t.add_argument("--rate", type=float, default=0.0,
                   help="growth rate for exp (default 0)")
    t.add_argument("--table", metavar="PATH", default=None,
                   help="two-column CSV (t, value) for table")
    _add_step_flags(t)
    t.add_argument("--tau", type=float, default=1.0,
                   help="time quantum (default 1)")
    t.add_argument("--method", choices=("quadrature", "monte-carlo"),
                   default="quadrature")
    t.add_argument("--samples", type=int, default=100_000,
                   help="Monte Carlo sample count (default 100000)")
    t.add_argument("--nodes", type=int, default=None,
                   help="initial quadrature node count")
    t.add_argument("--error-target", type=float, default=1e-10,
                   help="relative quadrature target (default 1e-10)")
    t.set_defaults(handler=_cmd_transform, command_path="transform")
    leaves.append(t)

    c = subs.add_parser("classical", parents=[_common_parent()],
                        help="moment report for a classical system")
    c.add_argument("--model", choices=("free", "oscillator"), default="free")
    c.add_argument("--route", choices=("closed", "quadrature"),
                   default="closed")
    c.add_argument("--x", default=None, help="comma-separated positions")
    c.add_argument("--p", default=None, help="comma-separated momenta")
    c.add_argument("--mass", default=None,
                   help="comma-separated masses (default all 1)")
    c.add_argument("--omega", type=float, default=1.0,
                   help="common oscillator frequency (default 1)")
    c.add_argument("--n", type=int, default=None,
                   help="report steps 0..n")
    c.add_argument("--tau", type=float, default=1.0)
    c.set_defaults(handler=_cmd_classical, command_path="classical")
    leaves.append(c)

    q = subs.add_parser("quantum", help="density-matrix commands")
    qsubs = q.add_subparsers(dest="action", required=True, metavar="ACTION")

    td = qsubs.add_parser("td", parents=[_common_parent(), _preset_parent()],
                          help="decoherence times for energy gaps")
    td.add_argument("--delta-e", action="append", metavar="ENERGY",
                    help="energy gap; repeatable; needs meV/eV/J in SI mode")
    td.add_argument("--horizon", metavar="TIME", default=None,
                    help="custom comparison horizon (s/yr in SI mode); "
                         "default 1e10yr in SI")
    td.set_defaults(handler=_cmd_quantum_td, command_path="quantum td")
    leaves.append(td)

    ev = qsubs.add_parser("evolve", parents=[_common_parent(), _preset_parent()],
                          help="evolve a density matrix n steps")
    ev.add_argument("--state", metavar="PATH", default=None,
                    help="JSON file: energies[], re[][], im[][]")
    ev.add_argument("--n", type=int, default=None, help="step count")
    ev.add_argument("--repair", action="store_true",
                    help="project an almost-valid state instead of rejecting")
    ev.set_defaults(handler=_cmd_quantum_evolve, command_path="quantum evolve",
                    format="json")
    leaves.append(ev)

    eq = qsubs.add_parser("equivalence", parents=[_common_parent(), _preset_parent()],
                          help="discrete vs smeared-continuous agreement")
    eq.add_argument("--state", metavar="PATH", default=None)
    eq.add_argument("--repair", action="store_true")
    _add_step_flags(eq)
    eq.set_defaults(handler=_cmd_quantum_equivalence,
                    command_path="quantum equivalence")
    leaves.append(eq)

    df = qsubs.add_parser("defect", parents=[_common_parent(), _preset_parent()],
                          help="per-step deviation from unitary evolution")
    df.add_argument("--delta-e", action="append", metavar="ENERGY")
    _add_step_flags(df)
    df.set_defaults(handler=_cmd_quantum_defect,
                    command_path="quantum defect")
    leaves.append(df)

    ch = subs.add_parser("chaos", help="sensitivity growth benchmarks")
    chsubs = ch.add_subparsers(dest="action", required=True, metavar="ACTION")

    ct = chsubs.add_parser("ct", parents=[_common_parent()],
                           help="continuous-time sensitivity curve and fit")
    ct.add_argument("--a", type=float, default=None,
                    help="map parameter in (-1, 1)")
    ct.add_argument("--c", type=float, default=1.0, help="growth rate")
    ct.add_argument("--t-max", type=float, default=None)
    ct.add_argument("--grid", type=int, default=400,
                    help="output samples (default 400)")
    ct.add_argument("--fit-samples", type=int, default=1200)
    ct.add_argument("--no-fit", action="store_true",
                    help="emit the curve without a growth-rate fit")
    ct.set_defaults(handler=_cmd_chaos_ct, command_path="chaos ct")
    leaves.append(ct)

    dt = chsubs.add_parser("dt", parents=[_common_parent()],
                           help="discrete-time sensitivity curve and fit")
    dt.add_argument("--a", type=float, default=None)
    dt.add_argument("--c", type=float, default=1.0)
    dt.add_argument("--tau", type=float, default=None)
    dt.add_argument("--n-max", type=int, default=None)
    dt.add_argument("--no-fit", action="store_true")
    dt.set_defaults(handler=_cmd_chaos_dt, command_path="chaos dt")
    leaves.append(dt)

    al = subs.add_parser("alpha-scan", parents=[_common_parent()],
                         help="delta remnant and negativity across schemes")
    al.add_argument("--alphas", default="0,0.25,0.5,0.75",
                    help="comma-separated forward weights in [0, 1)")
    al.add_argument("--n-max", type=int, default=6)
    al.add_argument("--tau", type=float, default=1.0)
    al.add_argument("--sigma", type=float, default=0.05,
                    help="probe profile width (default 0.05)")
    al.add_argument("--length", type=float, default=64.0,
                    help="periodic domain length (default 64)")
    al.add_argument("--points", type=int, default=16384,
                    help="grid points, power of two (default 16384)")
    al.set_defaults(handler=_cmd_alpha_scan, command_path="alpha-scan")
    leaves.append(al)

    return parser, leaves


def _config_file_defaults(argv: list[str]) -> dict:
    """Pre-scan for --config and load its JSON object, if any."""
    path = None
    for i, token in enumerate(argv):
        if token == "--config":
            if i + 1 >= len(argv):
                raise ConfigError("--config needs a file path")
            path = argv[i + 1]
        elif token.startswith("--config="):
            path = token.split("=", 1)[1]
    if path is None:
        return {}
    with open(path) as handle:
        doc = json.load(handle)
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: config must be a JSON object")
    return {str(k).replace("-", "_"): v for k, v in doc.items()}


def _apply_file_defaults(leaves: list, defaults: dict) -> None:
    """Install config-file values as parser defaults (flags still win)."""
    known = set()
    for leaf in leaves:
        known.update(action.dest for action in leaf._actions)
    unknown = sorted(set(defaults) - known)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    for leaf in leaves:
        dests = {action.dest for action in leaf._actions}
        relevant = {k: v for k, v in defaults.items() if k in dests}
        if relevant:
            leaf.set_defaults(**relevant)


_META_EXCLUDED = {"handler", "command_path", "command", "action", "output",
                  "config", "seed", "threads"}


def _run(argv: list[str]) -> int:
    defaults = _config_file_defaults(argv)
    parser, leaves = build_parser()
    if defaults:
        _apply_file_defaults(leaves, defaults)
    args = parser.parse_args(argv)

    payload, extra = args.handler(args)

    config_echo = {k: v for k, v in sorted(vars(args).items())
                   if k not in _META_EXCLUDED}
    meta = build_meta(args.command_path, config_echo, args.seed,
                      resolve_thread_count(args.threads))
    meta.update(extra)

    if "document" in payload:
        if args.format != "json":
            raise ConfigError("this command writes a JSON document; "
                              "pass --format json (or omit --format)")
        text = render_json(meta, payload["document"])
    elif args.format == "json":
        text = render_json(meta, {"columns": payload["columns"],
                                  "rows": payload["rows"]})
    else:
        text = render_csv(meta, payload["columns"], payload["rows"])
    write_report(text, args.output)
    return 0


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        return _run(argv)
    except SystemExit as exc:  # argparse --help / --version
        code = exc.code
        if code is None or code == 0:
            return 0
        return int(code) if isinstance(code, int) else 2
    except NumericalError as exc:
        message = str(exc).replace("\n", " ")
        print(f"{type(exc).__name__}: {message}", file=sys.stderr)
        return 3
    except (ValueError, OSError) as exc:
        message = str(exc).replace("\n", " ")
        print(f"{type(exc).__name__}: {message}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
