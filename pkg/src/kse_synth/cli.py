"""Configuration-driven front end wiring synthesis, feasibility sweeps,
gamma minimization, closed-loop simulation, and reference-table reproduction
into reproducible jobs.

A job is one JSON document (``schema: 1``).  Every run writes
``manifest.json`` (config echo, artifact digests, wall times) and
``summary.txt``; sweep modes add ``sweep.csv`` and simulation adds
``trajectory.csv``.  CSV bodies are deterministic for a fixed config except
the ``wall_ms`` column; timestamps never leave the manifest.

Exit codes: 0 success, 2 configuration or schema violation, 3 plant
assumption failure, 4 required certificate Indeterminate, 5 numerical abort.
"""

from __future__ import annotations

import argparse
import hashlib
import io
import json
import math
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from kse_synth import __version__
from kse_synth.gains import GainSet, build_reduced_model, design_gains, make_gain_set
from kse_synth.lmi import assemble_gain_lmi, assemble_stab_lmi, build_closed_loop
from kse_synth.sdp import (
    FeasibilityError,
    SweepReport,
    SweepRow,
    Verdict,
    min_feasible_n,
    min_gamma,
    solve_margin,
)
from kse_synth.simulate import (
    DivergenceError,
    SimScenario,
    Sinusoid,
    TravelingWave,
    compute_norms,
    integrate,
    iss_check,
    lyapunov_samples,
    project_initial,
    write_trajectory_csv,
)
from kse_synth.spectral import (
    AssumptionError,
    BoundaryRegime,
    PlantConfig,
    SpectralModel,
    build_spectral_model,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_ASSUMPTION = 3
EXIT_INDETERMINATE = 4
EXIT_NUMERIC = 5

MODES = ("stabilize", "min-n", "min-gamma", "simulate", "reproduce-table")

# Published reference gains, recorded with the design margin delta0 the
# source reports for each set.
REFERENCE_GAINS = {
    ("dirichlet", "stabilization"): {
        "K0": (7.1415, 26.0901), "L0": (2.3419,), "delta0": 5.0},
    ("dirichlet", "performance"): {
        "K0": (3.0672, 15.911), "L0": (1.501,), "delta0": 1.5},
    ("neumann", "stabilization"): {
        "K0": (477.83, 32.61, -3315.44), "L0": (-6.147, 8.101), "delta0": 5.0},
    ("neumann", "performance"): {
        "K0": (291.602, 13.311, -2043.3), "L0": (-1.967, 3.741), "delta0": 1.0},
}

TABLE_GRID = {
    "I": (BoundaryRegime.DIRICHLET, (4, 6, 8, 10, 12)),
    "II": (BoundaryRegime.NEUMANN, (5, 7, 9, 11, 13)),
}

# Bisection brackets per table row; the upper end must be comfortably
# feasible, the lower end comfortably infeasible.
TABLE_BRACKETS = {
    ("I", "iss"): (0.05, 2.0),
    ("I", "l2"): (1.0, 40.0),
    ("II", "iss"): (0.1, 10.0),
    ("II", "l2"): (5.0, 60.0),
}

TABLE_WEIGHTS = {"iss": (0.0, 0.0), "l2": (0.1, 0.2)}
TABLE_DELTAS = {"iss": 1.0, "l2": 0.0}


class ConfigError(ValueError):
    """A job document violating the schema or the mode's field contract."""


# --- config parsing --------------------------------------------------------------


@dataclass(frozen=True)
class JobConfig:
    """Validated job description (mode-specific fields may be None)."""

    mode: str
    plant: PlantConfig | None
    gains_spec: dict | None
    N: int | None
    n_range: tuple[int, int] | None
    n_list: tuple[int, ...] | None
    gamma_bracket: tuple[float, float] | None
    sim: dict | None
    table: str | None
    outdir: str | None
    raw: dict


def _expect(obj, key, where, required=True):
    if key not in obj or obj[key] is None:
        if required:
            raise ConfigError(f"{where}: missing required field '{key}'")
        return None
    return obj[key]


def _number(value, key, where, positive=False, nonnegative=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where}: '{key}' must be a number, got {value!r}")
    value = float(value)
    if positive and value <= 0:
        raise ConfigError(f"{where}: '{key}' must be positive, got {value}")
    if nonnegative and value < 0:
        raise ConfigError(f"{where}: '{key}' must be nonnegative, got {value}")
    return value


def _integer(value, key, where, minimum=None):
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{where}: '{key}' must be an integer, got {value!r}")
    if minimum is not None and value < minimum:
        raise ConfigError(f"{where}: '{key}' must be >= {minimum}, got {value}")
    return value


def parse_x_star(value):
    """Sensing location: a float in (0,1) or the exact literal "1/pi"."""
    if value is None:
        return None
    if value == "1/pi":
        return 1.0 / math.pi
    if isinstance(value, str):
        raise ConfigError(
            f"plant: x_star string must be the literal \"1/pi\", got {value!r}")
    return _number(value, "x_star", "plant")


def _parse_plant(obj) -> PlantConfig:
    if not isinstance(obj, dict):
        raise ConfigError("'plant' must be an object")
    regime_name = _expect(obj, "regime", "plant")
    try:
        regime = BoundaryRegime(regime_name)
    except ValueError:
        raise ConfigError(
            f"plant: regime must be 'dirichlet' or 'neumann', got {regime_name!r}")
    known = {"nu", "regime", "x_star", "delta", "Gamma", "rho_w", "rho_u", "gamma"}
    unknown = set(obj) - known
    if unknown:
        raise ConfigError(f"plant: unknown fields {sorted(unknown)}")
    kwargs = dict(
        nu=_number(_expect(obj, "nu", "plant"), "nu", "plant", positive=True),
        regime=regime,
        x_star=parse_x_star(obj.get("x_star")),
        delta=_number(obj.get("delta", 0.0), "delta", "plant", nonnegative=True),
    )
    if obj.get("Gamma") is not None:
        kwargs["Gamma"] = _number(obj["Gamma"], "Gamma", "plant", positive=True)
    kwargs["rho_w"] = _number(obj.get("rho_w", 0.0), "rho_w", "plant", nonnegative=True)
    kwargs["rho_u"] = _number(obj.get("rho_u", 0.0), "rho_u", "plant", nonnegative=True)
    if obj.get("gamma") is not None:
        kwargs["gamma"] = _number(obj["gamma"], "gamma", "plant", positive=True)
    try:
        return PlantConfig(**kwargs)
    except ValueError as ex:
        raise ConfigError(f"plant: {ex}")


def _parse_gains(obj) -> dict:
    if not isinstance(obj, dict):
        raise ConfigError("'gains' must be an object")
    kind = _expect(obj, "kind", "gains")
    if kind == "auto":
        return {"kind": "auto",
                "delta0": _number(_expect(obj, "delta0", "gains"), "delta0",
                                  "gains", positive=True)}
    if kind == "explicit":
        K0 = _expect(obj, "K0", "gains")
        L0 = _expect(obj, "L0", "gains")
        for name, vec in (("K0", K0), ("L0", L0)):
            if (not isinstance(vec, list) or not vec
                    or not all(isinstance(v, (int, float)) and not isinstance(v, bool)
                               for v in vec)):
                raise ConfigError(f"gains: '{name}' must be a nonempty number list")
        out = {"kind": "explicit", "K0": [float(v) for v in K0],
               "L0": [float(v) for v in L0]}
        if obj.get("delta0") is not None:
            out["delta0"] = _number(obj["delta0"], "delta0", "gains", positive=True)
        return out
    if kind == "reference":
        role = _expect(obj, "role", "gains")
        if role not in ("stabilization", "performance"):
            raise ConfigError(
                f"gains: role must be 'stabilization' or 'performance', got {role!r}")
        return {"kind": "reference", "role": role}
    raise ConfigError(
        f"gains: kind must be 'auto', 'explicit' or 'reference', got {kind!r}")


def _parse_signal(obj, where):
    if obj is None:
        return None
    if not isinstance(obj, dict):
        raise ConfigError(f"{where}: must be null or an object")
    kind = _expect(obj, "kind", where)
    if kind == "traveling-wave":
        return TravelingWave(
            amplitude=_number(_expect(obj, "amplitude", where), "amplitude", where),
            space_freq=_number(_expect(obj, "space_freq", where), "space_freq", where),
            time_freq=_number(_expect(obj, "time_freq", where), "time_freq", where))
    if kind == "sinusoid":
        return Sinusoid(
            amplitude=_number(_expect(obj, "amplitude", where), "amplitude", where),
            freq=_number(_expect(obj, "freq", where), "freq", where),
            phase=_number(obj.get("phase", 0.0), "phase", where))
    raise ConfigError(f"{where}: unknown signal kind {kind!r}")


def _parse_sim(obj) -> dict:
    if not isinstance(obj, dict):
        raise ConfigError("'sim' must be an object")
    known = {"ic", "d", "sigma", "T", "h", "M", "modes_in_csv"}
    unknown = set(obj) - known
    if unknown:
        raise ConfigError(f"sim: unknown fields {sorted(unknown)}")
    ic = _expect(obj, "ic", "sim")
    if not isinstance(ic, dict) or "kind" not in ic:
        raise ConfigError("sim: 'ic' must be an object with a 'kind'")
    if ic["kind"] == "bump":
        ic = {"kind": "bump",
              "scale": _number(_expect(ic, "scale", "sim.ic"), "scale", "sim.ic"),
              "power": _integer(_expect(ic, "power", "sim.ic"), "power", "sim.ic",
                                minimum=1)}
    elif ic["kind"] == "modal":
        coeffs = _expect(ic, "coeffs", "sim.ic")
        if (not isinstance(coeffs, list)
                or not all(isinstance(v, (int, float)) and not isinstance(v, bool)
                           for v in coeffs)):
            raise ConfigError("sim.ic: 'coeffs' must be a number list")
        ic = {"kind": "modal", "coeffs": [float(v) for v in coeffs]}
    elif ic["kind"] == "zero":
        ic = {"kind": "zero"}
    else:
        raise ConfigError(f"sim.ic: unknown kind {ic['kind']!r}")
    modes_in_csv = obj.get("modes_in_csv", False)
    if not isinstance(modes_in_csv, bool):
        raise ConfigError("sim: 'modes_in_csv' must be a boolean")
    return {
        "ic": ic,
        "d": _parse_signal(obj.get("d"), "sim.d"),
        "sigma": _parse_signal(obj.get("sigma"), "sim.sigma"),
        "T": _number(_expect(obj, "T", "sim"), "T", "sim", positive=True),
        "h": _number(obj.get("h", 1e-4), "h", "sim", positive=True),
        "M": _integer(obj.get("M", 60), "M", "sim", minimum=1),
        "modes_in_csv": modes_in_csv,
    }


def load_config(path) -> JobConfig:
    """Parse and validate one job document; raises ConfigError on violations."""
    try:
        text = Path(path).read_text()
    except OSError as ex:
        raise ConfigError(f"cannot read config: {ex}")
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as ex:
        raise ConfigError(f"config is not valid JSON: {ex}")
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")
    schema = raw.get("schema")
    if schema != 1:
        raise ConfigError(f"unsupported schema {schema!r} (expected 1)")
    mode = _expect(raw, "mode", "config")
    if mode not in MODES:
        raise ConfigError(f"mode must be one of {', '.join(MODES)}; got {mode!r}")
    known = {"schema", "mode", "plant", "gains", "N", "sweep", "gamma_bracket",
             "sim", "table", "outdir"}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"config: unknown fields {sorted(unknown)}")

    table = None
    plant = None
    gains_spec = None
    N = None
    n_range = None
    n_list = None
    gamma_bracket = None
    sim = None

    if mode == "reproduce-table":
        table = _expect(raw, "table", "config")
        if table not in TABLE_GRID:
            raise ConfigError(f"table must be 'I' or 'II', got {table!r}")
    else:
        plant = _parse_plant(_expect(raw, "plant", "config"))
        gains_spec = _parse_gains(_expect(raw, "gains", "config"))

    if mode in ("stabilize", "simulate"):
        N = _integer(_expect(raw, "N", "config"), "N", "config", minimum=1)
    if mode == "min-n":
        sweep = _expect(raw, "sweep", "config")
        if not isinstance(sweep, dict):
            raise ConfigError("'sweep' must be an object")
        lo = _integer(_expect(sweep, "n_lo", "sweep"), "n_lo", "sweep", minimum=1)
        hi = _integer(_expect(sweep, "n_hi", "sweep"), "n_hi", "sweep", minimum=1)
        if lo > hi:
            raise ConfigError(f"sweep: n_lo={lo} must not exceed n_hi={hi}")
        n_range = (lo, hi)
    if mode == "min-gamma":
        sweep = _expect(raw, "sweep", "config")
        if not isinstance(sweep, dict):
            raise ConfigError("'sweep' must be an object")
        lst = _expect(sweep, "n_list", "sweep")
        if (not isinstance(lst, list) or not lst
                or not all(isinstance(v, int) and not isinstance(v, bool) and v >= 1
                           for v in lst)):
            raise ConfigError("sweep: 'n_list' must be a nonempty list of N >= 1")
        if lst != sorted(lst):
            raise ConfigError("sweep: 'n_list' must be ascending")
        n_list = tuple(lst)
        bracket = _expect(raw, "gamma_bracket", "config")
        if (not isinstance(bracket, list) or len(bracket) != 2
                or not all(isinstance(v, (int, float)) and not isinstance(v, bool)
                           for v in bracket)):
            raise ConfigError("'gamma_bracket' must be [lo, hi]")
        lo, hi = float(bracket[0]), float(bracket[1])
        if not 0 < lo < hi:
            raise ConfigError(f"gamma_bracket requires 0 < lo < hi, got [{lo}, {hi}]")
        gamma_bracket = (lo, hi)
    if mode == "simulate":
        sim = _parse_sim(_expect(raw, "sim", "config"))

    outdir = raw.get("outdir")
    if outdir is not None and not isinstance(outdir, str):
        raise ConfigError("'outdir' must be a string")
    return JobConfig(mode=mode, plant=plant, gains_spec=gains_spec, N=N,
                     n_range=n_range, n_list=n_list, gamma_bracket=gamma_bracket,
                     sim=sim, table=table, outdir=outdir, raw=raw)


# --- shared builders -------------------------------------------------------------


def reference_gain_set(spectral: SpectralModel, role: str,
                       certify_at: float) -> GainSet:
    """Bundled published gains for the spectral model's regime."""
    entry = REFERENCE_GAINS[(spectral.regime.value, role)]
    return make_gain_set(build_reduced_model(spectral), np.array([entry["K0"]]),
                         np.array(entry["L0"]).reshape(-1, 1),
                         delta0=entry["delta0"], delta=certify_at)


def _build_gains(spectral: SpectralModel, gains_spec: dict,
                 certify_at: float) -> GainSet:
    model = build_reduced_model(spectral)
    try:
        if gains_spec["kind"] == "auto":
            return design_gains(model, gains_spec["delta0"], certify_at=certify_at)
        if gains_spec["kind"] == "reference":
            return reference_gain_set(spectral, gains_spec["role"], certify_at)
        delta0 = gains_spec.get("delta0", max(certify_at, 1.0))
        return make_gain_set(model, np.array([gains_spec["K0"]]),
                             np.array(gains_spec["L0"]).reshape(-1, 1),
                             delta0=delta0, delta=certify_at)
    except ValueError as ex:
        raise ConfigError(f"gains: {ex}")


def _certificate_entry(name: str, cert) -> dict:
    entry = {"name": name, "verdict": cert.status.value,
             "margin": cert.margin, "alpha": cert.alpha,
             "iterations": cert.iterations, "attempt": cert.attempt}
    if cert.P is not None:
        entry["P_sha256"] = hashlib.sha256(np.ascontiguousarray(cert.P)
                                           .tobytes()).hexdigest()
    return entry


# --- mode runners ----------------------------------------------------------------


def _run_stabilize(cfg: JobConfig, outputs: dict, certs: list) -> tuple[int, list]:
    plant = cfg.plant
    sp = build_spectral_model(plant, N=cfg.N)
    gains = _build_gains(sp, cfg.gains_spec, plant.delta)
    cl = build_closed_loop(sp, gains)
    cert = solve_margin(assemble_stab_lmi(cl, sp, plant.delta, Gamma=plant.Gamma))
    certs.append(_certificate_entry("stabilization", cert))
    lines = [
        f"mode: stabilize  regime: {plant.regime.value}  nu={plant.nu:g}  "
        f"delta={plant.delta:g}  N={cfg.N} (N0={sp.N0})",
        f"K0 = {np.array2string(gains.K0[0], precision=6)}",
        f"L0 = {np.array2string(gains.L0[:, 0], precision=6)}",
        f"verdict: {cert.status.value}  margin={cert.margin:.6g}",
    ]
    if cert.status is Verdict.INDETERMINATE:
        return EXIT_INDETERMINATE, lines
    return EXIT_OK, lines


def _run_min_n(cfg: JobConfig, outputs: dict, certs: list) -> tuple[int, list]:
    plant = cfg.plant
    lo, hi = cfg.n_range
    sp_lo = build_spectral_model(plant, N=max(lo, 1))
    gains = _build_gains(sp_lo, cfg.gains_spec, plant.delta)

    def builder(n):
        sp = build_spectral_model(plant, N=n)
        cl = build_closed_loop(sp, gains)
        if plant.gamma is not None:
            return assemble_gain_lmi(cl, sp, plant.delta, plant.gamma,
                                     plant.rho_w, plant.rho_u, Gamma=plant.Gamma)
        return assemble_stab_lmi(cl, sp, plant.delta, Gamma=plant.Gamma)

    n_star, report = min_feasible_n(builder, lo, hi)
    outputs["sweep.csv"] = report.to_csv()
    kind = "disturbance-gain" if plant.gamma is not None else "stabilization"
    lines = [
        f"mode: min-n  regime: {plant.regime.value}  certificate: {kind}  "
        f"delta={plant.delta:g}  range=[{lo}, {hi}]",
    ]
    if n_star is None:
        lines.append(f"N* = none (no feasible N in [{lo}, {hi}])")
        if any(row.status is Verdict.INDETERMINATE for row in report.rows):
            lines.append("at least one solve was Indeterminate")
            return EXIT_INDETERMINATE, lines
        return EXIT_OK, lines
    lines.append(f"N* = {n_star} (margin {report.rows[-1].margin:.6g})")
    return EXIT_OK, lines


def _run_min_gamma(cfg: JobConfig, outputs: dict, certs: list) -> tuple[int, list]:
    plant = cfg.plant
    lo, hi = cfg.gamma_bracket
    sp0 = build_spectral_model(plant, N=cfg.n_list[0])
    gains = _build_gains(sp0, cfg.gains_spec, plant.delta)
    lines = [
        f"mode: min-gamma  regime: {plant.regime.value}  delta={plant.delta:g}  "
        f"rho_w={plant.rho_w:g}  rho_u={plant.rho_u:g}  bracket=[{lo:g}, {hi:g}]",
    ]
    rows = []
    status = EXIT_OK
    for n in cfg.n_list:
        sp = build_spectral_model(plant, N=n)
        cl = build_closed_loop(sp, gains)

        def builder(gamma):
            return assemble_gain_lmi(cl, sp, plant.delta, gamma,
                                     plant.rho_w, plant.rho_u, Gamma=plant.Gamma)

        start = time.perf_counter()
        try:
            g_star = min_gamma(builder, lo, hi)
        except FeasibilityError as ex:
            wall = 1e3 * (time.perf_counter() - start)
            rows.append(SweepRow(n=n, gamma=None, status=ex.certificate.status,
                                 margin=ex.certificate.margin, wall_ms=wall))
            lines.append(f"N={n}: no certified gamma at bracket top "
                         f"({ex.certificate.status.value})")
            if ex.certificate.status is Verdict.INDETERMINATE:
                status = EXIT_INDETERMINATE
            continue
        cert = solve_margin(builder(g_star))
        wall = 1e3 * (time.perf_counter() - start)
        certs.append(_certificate_entry(f"gamma-N{n}", cert))
        rows.append(SweepRow(n=n, gamma=g_star, status=cert.status,
                             margin=cert.margin, wall_ms=wall))
        lines.append(f"N={n}: gamma* = {g_star:.6g}")
    outputs["sweep.csv"] = SweepReport(tuple(rows)).to_csv()
    return status, lines


def _initial_profile(sp: SpectralModel, ic: dict) -> np.ndarray:
    m_count = sp.M + 1 - sp.regime.first_mode
    if ic["kind"] == "zero":
        return np.zeros(m_count)
    if ic["kind"] == "modal":
        return np.asarray(ic["coeffs"], dtype=float)
    scale, power = ic["scale"], ic["power"]
    return project_initial(lambda x: scale * (x - x * x) ** power, sp)


def _run_simulate(cfg: JobConfig, outputs: dict, certs: list) -> tuple[int, list]:
    plant = cfg.plant
    sim = cfg.sim
    sp = build_spectral_model(plant, N=cfg.N, M=sim["M"])
    gains = _build_gains(sp, cfg.gains_spec, plant.delta)
    w0 = _initial_profile(sp, sim["ic"])
    try:
        scenario = SimScenario(plant=plant, spectral=sp, gains=gains, w0=w0,
                               d=sim["d"], sigma=sim["sigma"],
                               horizon=sim["T"], step=sim["h"])
    except ValueError as ex:
        raise ConfigError(f"sim: {ex}")

    lines = [
        f"mode: simulate  regime: {plant.regime.value}  N={cfg.N}  M={sim['M']}  "
        f"T={sim['T']:g}  h={sim['h']:g}",
    ]
    P = None
    tail_power = None
    cl = build_closed_loop(sp, gains)
    if plant.gamma is not None:
        cert = solve_margin(assemble_gain_lmi(cl, sp, plant.delta, plant.gamma,
                                              plant.rho_w, plant.rho_u,
                                              Gamma=plant.Gamma))
        certs.append(_certificate_entry("disturbance-gain", cert))
        tail_power = 1
    else:
        cert = solve_margin(assemble_stab_lmi(cl, sp, plant.delta,
                                              Gamma=plant.Gamma))
        certs.append(_certificate_entry("stabilization", cert))
    if cert.status is Verdict.FEASIBLE:
        P = cert.P
        lines.append(f"certificate: {cert.status.value} (margin {cert.margin:.6g})")
    else:
        lines.append(f"certificate: {cert.status.value} — V column left at zero")

    performance = None
    if plant.gamma is not None:
        performance = (plant.rho_w, plant.rho_u, plant.gamma)
    traj = integrate(scenario, P=P, performance=performance,
                     tail_power=tail_power)

    buf = io.StringIO()
    write_trajectory_csv(traj, buf, include_modes=sim["modes_in_csv"])
    outputs["trajectory.csv"] = buf.getvalue()

    norms = compute_norms(traj)
    lines.append(f"normH1_w: start {norms.H1_w[0]:.6g}  end {norms.H1_w[-1]:.6g}")
    if performance is not None:
        J = traj.J
        lines.append(f"J: max {J.max():.6g}  end {J[-1]:.6g}")
    if P is not None and plant.gamma is not None and plant.delta > 0:
        resid = iss_check(traj, P, plant.delta, plant.gamma)
        V0 = lyapunov_samples(traj, P, tail_power=tail_power)[0]
        lines.append(f"iss residual: {resid:.6g} (V(0) = {V0:.6g})")
    return EXIT_OK, lines


def reproduce_table(which: str, tol_gamma: float = 0.05) -> str:
    """Minimal certified gamma per N for one reference table, as CSV text.

    Rows hold the bundled published gains: the ISS column uses the
    stabilization set at delta=1, the L2 column the performance set at
    delta=0 with weights rho_w=0.1, rho_u=0.2.
    """
    if which not in TABLE_GRID:
        raise ValueError(f"table must be 'I' or 'II', got {which!r}")
    regime, grid = TABLE_GRID[which]
    lines = ["N,gamma_iss,gamma_l2,wall_ms"]
    for n in grid:
        start = time.perf_counter()
        values = {}
        for role_key, role in (("iss", "stabilization"), ("l2", "performance")):
            delta = TABLE_DELTAS[role_key]
            rho_w, rho_u = TABLE_WEIGHTS[role_key]
            if regime is BoundaryRegime.DIRICHLET:
                plant = PlantConfig(nu=10.0, regime=regime, x_star=1.0 / math.pi,
                                    delta=delta, rho_w=rho_w, rho_u=rho_u)
            else:
                plant = PlantConfig(nu=10.0, regime=regime, Gamma=1.0,
                                    delta=delta, rho_w=rho_w, rho_u=rho_u)
            sp = build_spectral_model(plant, N=n)
            gains = reference_gain_set(sp, role, certify_at=delta)
            cl = build_closed_loop(sp, gains)

            def builder(gamma):
                return assemble_gain_lmi(cl, sp, delta, gamma, rho_w, rho_u,
                                         Gamma=plant.Gamma)

            lo, hi = TABLE_BRACKETS[(which, role_key)]
            values[role_key] = min_gamma(builder, lo, hi, tol_gamma=tol_gamma)
        wall = 1e3 * (time.perf_counter() - start)
        lines.append(f"{n},{values['iss']:.10g},{values['l2']:.10g},{wall:.1f}")
    return "\n".join(lines) + "\n"


def _run_reproduce_table(cfg: JobConfig, outputs: dict,
                         certs: list) -> tuple[int, list]:
    csv_text = reproduce_table(cfg.table)
    outputs["sweep.csv"] = csv_text
    lines = [f"mode: reproduce-table  table: {cfg.table}"]
    for row in csv_text.splitlines()[1:]:
        n, g_iss, g_l2, _ = row.split(",")
        lines.append(f"N={n}: gamma_iss = {float(g_iss):.4g}  "
                     f"gamma_l2 = {float(g_l2):.4g}")
    return EXIT_OK, lines


_RUNNERS = {
    "stabilize": _run_stabilize,
    "min-n": _run_min_n,
    "min-gamma": _run_min_gamma,
    "simulate": _run_simulate,
    "reproduce-table": _run_reproduce_table,
}


# --- orchestration ---------------------------------------------------------------


def _write_outputs(outdir: Path, outputs: dict) -> list[dict]:
    entries = []
    for name, text in outputs.items():
        path = outdir / name
        data = text.encode() if isinstance(text, str) else text
        path.write_bytes(data)
        entries.append({"name": name, "bytes": len(data),
                        "sha256": hashlib.sha256(data).hexdigest()})
    return entries


def run(config_path, outdir=None, verbose=False) -> int:
    """Execute one job document and write its artifacts; returns exit code."""
    try:
        cfg = load_config(config_path)
    except ConfigError as ex:
        print(f"config error: {ex}", file=sys.stderr)
        return EXIT_CONFIG

    out = Path(outdir if outdir is not None else (cfg.outdir or "."))
    out.mkdir(parents=True, exist_ok=True)

    outputs: dict = {}
    certs: list = []
    start = time.perf_counter()
    try:
        code, lines = _RUNNERS[cfg.mode](cfg, outputs, certs)
    except ConfigError as ex:
        print(f"config error: {ex}", file=sys.stderr)
        return EXIT_CONFIG
    except AssumptionError as ex:
        print(f"assumption failure: {ex}", file=sys.stderr)
        return EXIT_ASSUMPTION
    except FeasibilityError as ex:
        print(f"solver failure: {ex}", file=sys.stderr)
        return (EXIT_INDETERMINATE
                if ex.certificate.status is Verdict.INDETERMINATE else EXIT_OK)
    except DivergenceError as ex:
        print(f"numerical abort: {ex}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as ex:
        print(f"numerical abort: {ex}", file=sys.stderr)
        return EXIT_NUMERIC
    wall_ms = 1e3 * (time.perf_counter() - start)

    outputs["summary.txt"] = "\n".join(lines) + "\n"
    entries = _write_outputs(out, outputs)
    manifest = {
        "schema": 1,
        "tool": "kse-synth",
        "version": __version__,
        "mode": cfg.mode,
        "exit_code": code,
        "config": cfg.raw,
        "outputs": entries,
        "certificates": certs,
        "wall_ms": round(wall_ms, 1),
    }
    manifest_text = json.dumps(manifest, indent=2, sort_keys=True) + "\n"
    (out / "manifest.json").write_text(manifest_text)

    if verbose or code != EXIT_OK:
        print("\n".join(lines))
    print(f"wrote {out / 'manifest.json'}")
    return code


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="kse-synth",
        description="Observer-based boundary-control synthesis and verification jobs")
    parser.add_argument("config", help="path to a JSON job document (schema 1)")
    parser.add_argument("--outdir", help="output directory (overrides config)")
    parser.add_argument("--threads", type=int,
                        help="BLAS thread count (or env KSE_SYNTH_THREADS)")
    parser.add_argument("--verbose", action="store_true",
                        help="echo the summary to stdout")
    args = parser.parse_args(argv)
    if args.threads is not None and args.threads < 1:
        parser.error("--threads must be a positive integer")
    return run(args.config, outdir=args.outdir, verbose=args.verbose)


if __name__ == "__main__":
    sys.exit(main())
