"""Command-line laboratory front end.

Every subcommand resolves a sectioned configuration (built-in defaults,
then an INI file, then --set overrides), hashes it into a run id, and
writes its artifacts plus a record.json into out/<run_id>/.  Delimited
tables are the contract: identical configurations produce byte-identical
CSVs.  --figures additionally renders PNG summaries next to the tables.

Exit codes: 0 success, 2 invalid usage or configuration, 3 numerical
failure (guard trips, non-finite samples), 4 a run that ended in a
controlled blowup outcome (the record is still written).
"""

from __future__ import annotations

import argparse
import configparser
import json
import math
import os
import sys

import numpy as np

from .experiments import (
    CoefficientCase,
    Config,
    GaussianPulse,
    concentration_sweep,
    config_hash,
    kss_constant_sweep,
    lifespan_sweep,
    lifespan_sweep_fit,
    make_record,
    measurements_table,
    quasilinear_model,
    store_record,
    utt_square_model,
    write_table,
)
from .grids import RadialGrid, RadialProfile
from .inequalities import (
    InequalityCase,
    TestFamily,
    boundary_violation_sweep,
    estimate_best_constant,
    evaluate_family,
)
from .iteration import (
    NonlinearitySpec,
    ScalarFunction,
    convergence_report,
    picard_iterate,
)
from .multiplier import (
    CoefficientField,
    MultiplierSpec,
    identity_residual,
    integrated_identity_gap,
    refinement_ratio,
    sign_condition_report,
)
from .norms import NormParams, SpaceTimeField, le_norm, norm_record, write_records, x1_norm, xt_norm, xt_dual_norm
from .solver import (
    BlowupSignal,
    BoundaryContactError,
    NumericalFailureError,
    data_norm,
    energy_drift_check,
    pa_tilde_xt_norm,
    solve_linear,
    static_evaluator,
    zero_evaluator,
)

COMMANDS = (
    "solve",
    "iterate",
    "lifespan",
    "verify-inequality",
    "verify-identity",
    "norms",
    "sweep-kss",
)

DEFAULTS: dict[str, Config] = {
    "solve": {
        "grid": {"n": "3", "r_max": "32.0", "points": "1024"},
        "data": {"center": "4.0", "width": "1.0", "u0_amp": "1.0",
                 "u1_amp": "0.0", "eps": "1.0"},
        "coeff": {"amp": "0.1", "width": "1.0"},
        "solve": {"T": "4.0", "mu": "0.5", "delta0": "0.25", "cfl": "0.9"},
    },
    "iterate": {
        "grid": {"n": "3", "r_max": "32.0", "points": "512"},
        "data": {"center": "2.0", "width": "1.0", "u0_amp": "1.0",
                 "u1_amp": "0.5", "eps": "0.1"},
        "nonlinearity": {"kappa": "0.1", "a": "0.0", "b": "0.4"},
        "iterate": {"T": "1.0", "K": "6", "s": "1.8", "s0": "0.8",
                    "mu": "0.5", "smallness_delta": "0.25", "delta0": "0.25"},
    },
    "lifespan": {
        "grid": {"n": "3", "r_max": "12.0", "ladder": "512,1024"},
        "data": {"center": "0.0", "width": "1.0", "u0_amp": "0.0",
                 "u1_amp": "1.0"},
        "model": {"name": "utt-square", "kappa": "0.05"},
        "lifespan": {"eps": "1.0,1.3,2.2", "scales": "", "s": "1.8",
                     "t_cap": "18.0", "u_clip": "20.0", "delta0": "0.99",
                     "fit": "false"},
    },
    "verify-inequality": {
        "grid": {"n": "3", "r_max": "64.0", "points": "4096"},
        "case": {"id": "weighted_hardy", "s": "0.5", "p": "2.0",
                 "alpha": "0.2", "beta": "0.4", "f_kind": "square"},
        "family": {"kind": "gaussian_bumps", "count": "50", "seed": "0"},
        "sweep": {"lambdas": ""},
    },
    "verify-identity": {
        "field": {"kind": "separable", "r_max": "8.0", "T": "1.0"},
        "coeff": {"amp": "0.1", "delta0": "0.5"},
        "multiplier": {"family": "power", "mu": "0.5", "R": "1.0"},
        "ladder": {"points": "128,256,512", "steps": "32,64,128",
                   "r_window": "0.5,7.5", "t_window": "0.0625,0.9375"},
    },
    "norms": {
        "grid": {"n": "3", "r_max": "32.0", "points": "512"},
        "field": {"T": "1.0", "steps": "128", "width": "1.0"},
        "norms": {"mu": "0.5"},
    },
    "sweep-kss": {
        "grid": {"n": "3", "r_max": "12.0", "points": "256"},
        "family": {"count": "3", "seed": "20260815"},
        "case": {"name": "free", "amp": "0.02"},
        "kss": {"mu": "0.5", "thetas": "0.0,0.5,1.0",
                "horizons": "0.25,0.5,1.0", "delta2": "0.5", "delta0": "0.25"},
    },
}


# ---------------------------------------------------------------------------
# configuration plumbing


def _merge(config: Config, command: str, section: str, key: str, value: str) -> None:
    if section not in config or key not in config[section]:
        raise ValueError(
            f"unknown config entry [{section}] {key} for command {command!r}"
        )
    config[section][key] = value


def resolve_config(command: str, config_path: str | None,
                   overrides: list[str]) -> Config:
    """Defaults, then the INI file, then --set pairs; rejects unknown keys."""
    config: Config = {sec: dict(entries) for sec, entries in DEFAULTS[command].items()}
    if config_path is not None:
        parser = configparser.ConfigParser(interpolation=None)
        read = parser.read(config_path)
        if not read:
            raise ValueError(f"cannot read config file {config_path!r}")
        for section in parser.sections():
            for key, value in parser.items(section):
                _merge(config, command, section, key, value)
    for pair in overrides:
        head, eq, value = pair.partition("=")
        section, dot, key = head.partition(".")
        if not eq or not dot or not section or not key:
            raise ValueError(f"--set expects SECTION.KEY=VALUE, got {pair!r}")
        _merge(config, command, section.strip(), key.strip(), value.strip())
    return config


def as_float(config: Config, section: str, key: str) -> float:
    raw = config[section][key]
    try:
        return float(raw)
    except ValueError as exc:
        raise ValueError(f"[{section}] {key} must be a number, got {raw!r}") from exc


def as_int(config: Config, section: str, key: str) -> int:
    raw = config[section][key]
    try:
        return int(raw)
    except ValueError as exc:
        raise ValueError(f"[{section}] {key} must be an integer, got {raw!r}") from exc


def as_bool(config: Config, section: str, key: str) -> bool:
    raw = config[section][key].strip().lower()
    if raw in ("true", "yes", "1", "on"):
        return True
    if raw in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"[{section}] {key} must be a boolean, got {raw!r}")


def as_floats(config: Config, section: str, key: str) -> tuple[float, ...]:
    raw = config[section][key].strip()
    if not raw:
        return ()
    try:
        return tuple(float(tok) for tok in raw.split(","))
    except ValueError as exc:
        raise ValueError(
            f"[{section}] {key} must be a comma list of numbers, got {raw!r}"
        ) from exc


def as_ints(config: Config, section: str, key: str) -> tuple[int, ...]:
    raw = config[section][key].strip()
    if not raw:
        return ()
    try:
        return tuple(int(tok) for tok in raw.split(","))
    except ValueError as exc:
        raise ValueError(
            f"[{section}] {key} must be a comma list of integers, got {raw!r}"
        ) from exc


def _pulse(config: Config) -> GaussianPulse:
    return GaussianPulse(
        center=as_float(config, "data", "center"),
        width=as_float(config, "data", "width"),
        u0_amp=as_float(config, "data", "u0_amp"),
        u1_amp=as_float(config, "data", "u1_amp"),
    )


def _render_figure(path: str, draw) -> None:
    import matplotlib

    matplotlib.use("Agg", force=True)
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(5.5, 4.0))
    draw(ax)
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)


# ---------------------------------------------------------------------------
# command runners: (outputs, metrics, exit_code)


def run_solve(config: Config, out_dir: str, figures: bool):
    grid = RadialGrid(as_int(config, "grid", "n"), as_float(config, "grid", "r_max"),
                      as_int(config, "grid", "points"))
    shape = _pulse(config)
    eps = as_float(config, "data", "eps")
    u0v, u1v = shape(grid.r)
    data = (RadialProfile(grid, eps * u0v), RadialProfile(grid, eps * u1v))
    amp = as_float(config, "coeff", "amp")
    cw = as_float(config, "coeff", "width")
    coeff = static_evaluator(RadialProfile(grid, amp * np.exp(-((grid.r / cw) ** 2))))
    T = as_float(config, "solve", "T")
    p = NormParams(mu=as_float(config, "solve", "mu"), T=T)
    traj = solve_linear(data, coeff, zero_evaluator, T,
                        cfl=as_float(config, "solve", "cfl"),
                        delta0=as_float(config, "solve", "delta0"))
    drift = energy_drift_check(traj, coeff)

    final = traj.profile(len(traj.times) - 1)
    final_path = os.path.join(out_dir, "final_profile.csv")
    write_table(final_path, ("r", "value"), list(zip(grid.r, final.values)))
    energy_path = os.path.join(out_dir, "energy.csv")
    write_table(energy_path, ("t", "scheme_energy", "energy", "bound"),
                list(zip(drift.times, drift.scheme_energies, drift.energies,
                         drift.cumulative_bounds)))
    records = [
        norm_record("xt", p, xt_norm(traj, p)),
        norm_record("pa_tilde_xt", p, pa_tilde_xt_norm(traj, p)),
        norm_record("le", p, le_norm(traj, p)),
        norm_record("x1", p, x1_norm(traj, p)),
    ]
    norms_path = os.path.join(out_dir, "norms.json")
    write_records(records, norms_path)

    outputs = [("solution", "final_profile.csv"), ("energy", "energy.csv"),
               ("norms", "norms.json")]
    metrics = {
        "solution.sup_final": float(np.max(np.abs(final.values))),
        "energy.scheme_drift": drift.scheme_drift,
        "energy.recorded_C": drift.recorded_C,
        "norms.xt": records[0]["value"],
        "norms.pa_tilde_xt": records[1]["value"],
    }
    if figures:
        fig_path = os.path.join(out_dir, "final_profile.png")

        def draw(ax):
            ax.plot(grid.r, final.values, lw=1.0)
            ax.set_xlabel("r")
            ax.set_ylabel(f"u(T={T:g}, r)")

        _render_figure(fig_path, draw)
        outputs.append(("figure", "final_profile.png"))
    return outputs, metrics, 0


def run_iterate(config: Config, out_dir: str, figures: bool):
    grid = RadialGrid(as_int(config, "grid", "n"), as_float(config, "grid", "r_max"),
                      as_int(config, "grid", "points"))
    shape = _pulse(config)
    eps = as_float(config, "data", "eps")
    u0v, u1v = shape(grid.r)
    data = (RadialProfile(grid, eps * u0v), RadialProfile(grid, eps * u1v))
    kappa = as_float(config, "nonlinearity", "kappa")
    a = as_float(config, "nonlinearity", "a")
    b = as_float(config, "nonlinearity", "b")

    def scalar(kind_value: float) -> ScalarFunction:
        if kind_value == 0.0:
            return ScalarFunction("zero", ())
        return ScalarFunction("const", (kind_value,))

    nl = NonlinearitySpec(
        g=ScalarFunction("linear", (kappa,)) if kappa != 0.0 else ScalarFunction("zero", ()),
        a=scalar(a),
        b=scalar(b),
    )
    run = picard_iterate(
        data, nl,
        as_float(config, "iterate", "T"),
        as_int(config, "iterate", "K"),
        s=as_float(config, "iterate", "s"),
        s0=as_float(config, "iterate", "s0"),
        mu=as_float(config, "iterate", "mu"),
        smallness_delta=as_float(config, "iterate", "smallness_delta"),
        delta0=as_float(config, "iterate", "delta0"),
    )
    report = convergence_report(run)

    stages_path = os.path.join(out_dir, "stages.csv")
    write_table(stages_path, ("k", "smallness", "delta", "sup_amplitude", "passed"),
                [(st.k, st.smallness, st.delta, st.sup_amplitude, st.passed)
                 for st in run.stages])
    diff_path = os.path.join(out_dir, "differences.csv")
    ratios = [math.nan] + list(report.ratios)
    write_table(diff_path, ("j", "difference_norm", "ratio"),
                [(j, float(nrm), float(rat))
                 for j, (nrm, rat) in enumerate(zip(report.difference_norms, ratios))])
    rep_path = os.path.join(out_dir, "report.json")
    doc = {
        "fitted_ratio": report.fitted_ratio,
        "fit_r_squared": report.fit_r_squared,
        "convergent": report.convergent,
        "limit_distance": report.limit_distance,
        "non_contraction": list(report.non_contraction) if report.non_contraction else None,
        "truncated": run.truncated,
        "data_size": data_norm(*data, run.s - 1.0),
    }
    with open(rep_path, "w", encoding="ascii") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")

    outputs = [("stages", "stages.csv"), ("differences", "differences.csv"),
               ("report", "report.json")]
    metrics = {
        "report.fitted_ratio": report.fitted_ratio,
        "report.convergent": float(report.convergent),
        "differences.final_norm": float(report.difference_norms[-1]),
    }
    if figures:
        fig_path = os.path.join(out_dir, "differences.png")
        norms = report.difference_norms

        def draw(ax):
            ax.semilogy(range(len(norms)), np.maximum(norms, 1e-300), "o-")
            ax.set_xlabel("difference index")
            ax.set_ylabel("difference norm")

        _render_figure(fig_path, draw)
        outputs.append(("figure", "differences.png"))
    return outputs, metrics, 0


def run_lifespan(config: Config, out_dir: str, figures: bool):
    n = as_int(config, "grid", "n")
    r_max = as_float(config, "grid", "r_max")
    ladder_points = as_ints(config, "grid", "ladder")
    if not ladder_points:
        raise ValueError("[grid] ladder must list at least one point count")
    grids = tuple(RadialGrid(n, r_max, pts) for pts in ladder_points)
    shape = _pulse(config)
    model = config["model"]["name"]
    if model == "utt-square":
        nl = utt_square_model()
    elif model == "quasilinear":
        nl = quasilinear_model(as_float(config, "model", "kappa"))
    else:
        raise ValueError(
            f"[model] name must be utt-square or quasilinear, got {model!r}"
        )
    kwargs = dict(
        t_cap=as_float(config, "lifespan", "t_cap"),
        u_clip=as_float(config, "lifespan", "u_clip"),
        delta0=as_float(config, "lifespan", "delta0"),
    )
    scales = as_floats(config, "lifespan", "scales")
    if scales:
        ms = concentration_sweep(shape, scales, as_float(config, "lifespan", "eps"),
                                 nl, grids, s=as_float(config, "lifespan", "s"),
                                 **kwargs)
    else:
        eps_list = as_floats(config, "lifespan", "eps")
        if not eps_list:
            raise ValueError("[lifespan] eps must list at least one amplitude")
        ms = lifespan_sweep(shape, eps_list, nl, grids, **kwargs)

    meas_path = os.path.join(out_dir, "measurements.csv")
    measurements_table(meas_path, ms)
    ladder_path = os.path.join(out_dir, "ladder.csv")
    ladder_rows = [(m.eps, pts, t, status)
                   for m in ms for pts, t, status in m.ladder]
    write_table(ladder_path, ("eps", "points", "t_star", "status"), ladder_rows)

    outputs = [("measurements", "measurements.csv"), ("ladder", "ladder.csv")]
    metrics = {
        "measurements.count": float(len(ms)),
        "measurements.confirmed": float(sum(m.confirmed for m in ms)),
        "measurements.censored": float(sum(m.censored for m in ms)),
    }
    if as_bool(config, "lifespan", "fit"):
        rep = lifespan_sweep_fit(ms)
        fit_path = os.path.join(out_dir, "fit.json")
        doc = {
            "error": rep.error,
            "used": list(rep.used),
            "excluded": [list(pair) for pair in rep.excluded],
            "exponential": rep.exponential._asdict() if rep.exponential else None,
            "power": rep.power._asdict() if rep.power else None,
            "preferred": rep.preferred,
        }
        with open(fit_path, "w", encoding="ascii") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
            fh.write("\n")
        outputs.append(("fit", "fit.json"))
        if rep.error is None:
            metrics["fit.exp_slope"] = rep.exponential.slope
            metrics["fit.exp_r2"] = rep.exponential.r_squared
            metrics["fit.power_exponent"] = rep.power_exponent
            metrics["fit.power_r2"] = rep.power.r_squared
    if figures:
        fig_path = os.path.join(out_dir, "lifespans.png")
        pts = [(m.eps, m.t_star, m.confirmed) for m in ms]

        def draw(ax):
            for eps_v, t_v, conf in pts:
                ax.semilogy([1.0 / eps_v], [t_v], "o" if conf else "x",
                            color="tab:blue" if conf else "tab:red")
            ax.set_xlabel("1 / eps")
            ax.set_ylabel("T*")

        _render_figure(fig_path, draw)
        outputs.append(("figure", "lifespans.png"))
    blowup = any(m.status in ("amplitude", "hyperbolicity") for m in ms)
    return outputs, metrics, 4 if blowup else 0


def run_verify_inequality(config: Config, out_dir: str, figures: bool):
    grid = RadialGrid(as_int(config, "grid", "n"), as_float(config, "grid", "r_max"),
                      as_int(config, "grid", "points"))
    p_raw = config["case"]["p"]
    case = InequalityCase(
        config["case"]["id"],
        n=as_int(config, "grid", "n"),
        s=as_float(config, "case", "s"),
        p=math.inf if p_raw.strip().lower() in ("inf", "infinity") else as_float(config, "case", "p"),
        alpha=as_float(config, "case", "alpha"),
        beta=as_float(config, "case", "beta"),
        f_kind=config["case"]["f_kind"],
    )
    if not case.admissible:
        raise ValueError(
            f"case {case.case_id!r} with these exponents sits outside "
            "its admissible window"
        )
    fam = TestFamily(config["family"]["kind"], count=as_int(config, "family", "count"),
                     seed=as_int(config, "family", "seed"))
    pairs = evaluate_family(case, fam, grid)
    best = estimate_best_constant(case, fam, grid)

    ratios_path = os.path.join(out_dir, "ratios.csv")
    write_table(ratios_path, ("label", "ratio"), pairs)
    const_path = os.path.join(out_dir, "constant.json")
    with open(const_path, "w", encoding="ascii") as fh:
        json.dump({"case": case.params, "value": best.value, "argmax": best.argmax},
                  fh, indent=2, sort_keys=True)
        fh.write("\n")

    outputs = [("ratios", "ratios.csv"), ("constant", "constant.json")]
    finite = [v for _, v in pairs if math.isfinite(v)]
    metrics = {
        "constant.value": best.value,
        "ratios.max": max(finite) if finite else math.nan,
        "ratios.count": float(len(pairs)),
    }
    lambdas = as_floats(config, "sweep", "lambdas")
    if lambdas:
        table = boundary_violation_sweep(case, lambdas, grid)
        sweep_path = os.path.join(out_dir, "sweep.csv")
        write_table(sweep_path, ("lam", "ratio"),
                    [(row.lam, row.value) for row in table.rows])
        outputs.append(("sweep", "sweep.csv"))
        metrics["sweep.slope"] = table.slope
        metrics["sweep.growth_factor"] = table.growth_factor
    if figures:
        fig_path = os.path.join(out_dir, "ratios.png")

        def draw(ax):
            ax.hist(finite, bins=20)
            ax.set_xlabel("ratio")
            ax.set_ylabel("count")

        _render_figure(fig_path, draw)
        outputs.append(("figure", "ratios.png"))
    return outputs, metrics, 0


def _identity_field(kind: str, num_points: int, steps: int, r_max: float,
                    T: float) -> SpaceTimeField:
    grid = RadialGrid(3, r_max, num_points)
    times = np.linspace(0.0, T, steps + 1)
    if kind == "separable":
        prof = np.exp(-grid.r**2)
        vals = prof[None, :] * np.cos(times)[:, None]
        dts = -prof[None, :] * np.sin(times)[:, None]
        return SpaceTimeField(grid, times, vals, dts)
    if kind == "dalembert":
        tt, rr = np.meshgrid(times, grid.r, indexing="ij")

        def phi(s, k):
            poly = {0: 1.0, 1: -2.0 * (s + 4.0), 2: 4.0 * (s + 4.0) ** 2 - 2.0}[k]
            return poly * np.exp(-((s + 4.0) ** 2))

        with np.errstate(divide="ignore", invalid="ignore"):
            vals = (phi(tt - rr, 0) - phi(tt + rr, 0)) / rr
            dts = (phi(tt - rr, 1) - phi(tt + rr, 1)) / rr
        vals[:, 0] = -2.0 * phi(times, 1)
        dts[:, 0] = -2.0 * phi(times, 2)
        return SpaceTimeField(grid, times, vals, dts)
    raise ValueError(f"[field] kind must be separable or dalembert, got {kind!r}")


def run_verify_identity(config: Config, out_dir: str, figures: bool):
    kind = config["field"]["kind"]
    r_max = as_float(config, "field", "r_max")
    T = as_float(config, "field", "T")
    amp = as_float(config, "coeff", "amp")
    delta0 = as_float(config, "coeff", "delta0")
    spec = MultiplierSpec(config["multiplier"]["family"],
                          mu=as_float(config, "multiplier", "mu"),
                          R=as_float(config, "multiplier", "R"))
    points = as_ints(config, "ladder", "points")
    steps = as_ints(config, "ladder", "steps")
    if len(points) != len(steps) or len(points) < 2:
        raise ValueError("[ladder] points and steps must pair up, length >= 2")
    r_window = as_floats(config, "ladder", "r_window")
    t_window = as_floats(config, "ladder", "t_window")
    if len(r_window) != 2 or len(t_window) != 2:
        raise ValueError("[ladder] r_window and t_window each need two numbers")
    # fixed physical box: the node set must not creep toward the origin as
    # the grid refines, or the singular multiplier weight poisons the order
    windows = {"r_window": r_window, "t_window": t_window}

    rows = []
    for npts, nst in zip(points, steps):
        u = _identity_field(kind, npts, nst, r_max, T)
        if amp == 0.0:
            coeff = CoefficientField.flat(u.grid, u.times, delta0)
        else:
            prof = RadialProfile(u.grid, amp * np.exp(-u.grid.r**2))
            coeff = CoefficientField.static(prof, u.times, delta0)
        res = identity_residual(u, coeff, spec, **windows)
        gap = integrated_identity_gap(u, coeff, spec, **windows)
        rows.append((npts, nst, res, gap))

    res_path = os.path.join(out_dir, "residuals.csv")
    write_table(res_path, ("points", "steps", "residual", "integrated_gap"), rows)
    ratios = [refinement_ratio(rows[i][2], rows[i + 1][2], warn=False)
              for i in range(len(rows) - 1)]
    orders = [math.log2(r) for r in ratios if math.isfinite(r) and r > 0.0]
    signs = sign_condition_report(spec)
    signs_path = os.path.join(out_dir, "signs.json")
    with open(signs_path, "w", encoding="ascii") as fh:
        json.dump({"margins": signs.margins, "all_passed": signs.all_passed},
                  fh, indent=2, sort_keys=True)
        fh.write("\n")

    outputs = [("residuals", "residuals.csv"), ("signs", "signs.json")]
    metrics = {
        "residuals.finest": rows[-1][2],
        "residuals.order": min(orders) if orders else math.nan,
        "signs.all_passed": float(signs.all_passed),
    }
    if figures:
        fig_path = os.path.join(out_dir, "residuals.png")

        def draw(ax):
            ax.loglog([row[0] for row in rows], [row[2] for row in rows], "o-")
            ax.set_xlabel("grid points")
            ax.set_ylabel("max residual")

        _render_figure(fig_path, draw)
        outputs.append(("figure", "residuals.png"))
    return outputs, metrics, 0


def run_norms(config: Config, out_dir: str, figures: bool):
    grid = RadialGrid(as_int(config, "grid", "n"), as_float(config, "grid", "r_max"),
                      as_int(config, "grid", "points"))
    T = as_float(config, "field", "T")
    steps = as_int(config, "field", "steps")
    width = as_float(config, "field", "width")
    p = NormParams(mu=as_float(config, "norms", "mu"), T=T)
    times = np.linspace(0.0, T, steps + 1)
    prof = np.exp(-((grid.r / width) ** 2))
    vals = prof[None, :] * np.cos(times)[:, None]
    dts = -prof[None, :] * np.sin(times)[:, None]
    u = SpaceTimeField(grid, times, vals, dts)

    records = [
        norm_record("xt", p, xt_norm(u, p)),
        norm_record("pa_tilde_xt", p, pa_tilde_xt_norm(u, p)),
        norm_record("le", p, le_norm(u, p)),
        norm_record("x1", p, x1_norm(u, p)),
        norm_record("xt_dual", p, xt_dual_norm(u, p)),
    ]
    norms_path = os.path.join(out_dir, "norms.json")
    write_records(records, norms_path)
    table_path = os.path.join(out_dir, "norms.csv")
    write_table(table_path, ("norm_id", "value"),
                [(rec["norm_id"], rec["value"]) for rec in records])

    outputs = [("norms", "norms.json"), ("table", "norms.csv")]
    metrics = {f"norms.{rec['norm_id']}": rec["value"] for rec in records}
    if figures:
        fig_path = os.path.join(out_dir, "norms.png")

        def draw(ax):
            ax.bar([rec["norm_id"] for rec in records],
                   [rec["value"] for rec in records])
            ax.set_ylabel("value")
            ax.tick_params(axis="x", rotation=30)

        _render_figure(fig_path, draw)
        outputs.append(("figure", "norms.png"))
    return outputs, metrics, 0


def run_sweep_kss(config: Config, out_dir: str, figures: bool):
    grid = RadialGrid(as_int(config, "grid", "n"), as_float(config, "grid", "r_max"),
                      as_int(config, "grid", "points"))
    rng = np.random.default_rng(as_int(config, "family", "seed"))
    family = []
    for _ in range(as_int(config, "family", "count")):
        c = float(rng.uniform(0.0, grid.r_max / 4.0))
        w = float(rng.uniform(0.8, 2.0))
        r = grid.r
        bump = np.exp(-(((r - c) / w) ** 2)) + np.exp(-(((r + c) / w) ** 2))
        taper = np.exp(-np.maximum(r - 0.6 * grid.r_max, 0.0) ** 2 / 0.25)
        family.append((RadialProfile(grid, bump * taper),
                       RadialProfile(grid, 0.5 * bump * taper)))

    name = config["case"]["name"]
    amp = as_float(config, "case", "amp")
    if name == "free":
        cases = (CoefficientCase(label="free"),)
    elif name == "gauss":
        def gauss_g(t, rr):
            return amp * np.exp(-(rr**2)) * np.exp(-0.5 * t)

        cases = (CoefficientCase(label="free"),
                 CoefficientCase(label="gauss", coeff=gauss_g))
    else:
        raise ValueError(f"[case] name must be free or gauss, got {name!r}")

    tab = kss_constant_sweep(
        family, cases,
        as_floats(config, "kss", "horizons"),
        as_float(config, "kss", "mu"),
        thetas=as_floats(config, "kss", "thetas"),
        delta2=as_float(config, "kss", "delta2"),
        delta0=as_float(config, "kss", "delta0"),
    )
    kss_path = os.path.join(out_dir, "kss.csv")
    tab.write_csv(kss_path)
    summary_path = os.path.join(out_dir, "summary.json")
    caps = tab.max_per_theta()
    doc = {
        "mu": tab.mu,
        "thetas": list(tab.thetas),
        "max_per_theta": {repr(th): caps.get(th, math.nan) for th in tab.thetas},
        "spread_per_theta": {repr(th): (tab.spread(th) if tab.ratios_at(th) else math.nan)
                             for th in tab.thetas},
        "skipped": [list(entry) for entry in tab.skipped],
        "excluded_zero": tab.excluded_zero,
    }
    with open(summary_path, "w", encoding="ascii") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")

    outputs = [("kss", "kss.csv"), ("summary", "summary.json")]
    metrics = {
        "kss.rows": float(len(tab.rows)),
        "kss.skipped": float(len(tab.skipped)),
        "kss.excluded_zero": float(tab.excluded_zero),
    }
    theta0 = min(tab.thetas)
    if tab.ratios_at(theta0):
        metrics["kss.max_ratio_low_theta"] = caps[theta0]
        metrics["kss.spread_low_theta"] = tab.spread(theta0)
    if figures:
        fig_path = os.path.join(out_dir, "kss.png")
        rows = tab.rows

        def draw(ax):
            ax.scatter([row.theta for row in rows], [row.ratio for row in rows], s=12)
            ax.set_xlabel("theta")
            ax.set_ylabel("ratio")

        _render_figure(fig_path, draw)
        outputs.append(("figure", "kss.png"))
    return outputs, metrics, 0


RUNNERS = {
    "solve": run_solve,
    "iterate": run_iterate,
    "lifespan": run_lifespan,
    "verify-inequality": run_verify_inequality,
    "verify-identity": run_verify_identity,
    "norms": run_norms,
    "sweep-kss": run_sweep_kss,
}

HELP = {
    "solve": "linear solve with a static coefficient; norms and energy report",
    "iterate": "Picard iteration run with contraction diagnostics",
    "lifespan": "nonlinear lifespan sweep on a grid ladder",
    "verify-inequality": "empirical constants of one functional inequality",
    "verify-identity": "multiplier identity residuals on a refinement ladder",
    "norms": "norm table of an analytic reference field",
    "sweep-kss": "local-energy constant sweep over data and horizons",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="radwave",
        description="numerical laboratory for radial quasilinear waves",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        cmd = sub.add_parser(name, help=HELP[name])
        cmd.add_argument("--config", default=None, metavar="FILE",
                         help="INI config file; sections documented in the README")
        cmd.add_argument("--set", action="append", default=[], metavar="SEC.KEY=VAL",
                         dest="overrides", help="override one config entry")
        cmd.add_argument("--out", default="out", metavar="DIR",
                         help="parent directory for run outputs")
        cmd.add_argument("--figures", action="store_true",
                         help="also render PNG summaries next to the tables")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        config = resolve_config(args.command, args.config, args.overrides)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    run_id = config_hash(config)
    run_dir = os.path.join(args.out, run_id)
    os.makedirs(run_dir, exist_ok=True)
    try:
        outputs, metrics, code = RUNNERS[args.command](config, run_dir, args.figures)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (NumericalFailureError, BoundaryContactError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except BlowupSignal as exc:
        doc = {"reason": exc.reason, "t": exc.t, "detail": str(exc)}
        blow_path = os.path.join(run_dir, "blowup.json")
        with open(blow_path, "w", encoding="ascii") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
            fh.write("\n")
        record = make_record(config, [("blowup", "blowup.json")],
                             {"blowup.t": float(exc.t)})
        store_record(record, os.path.join(run_dir, "record.json"))
        print(f"controlled blowup: {exc}", file=sys.stderr)
        print(run_dir)
        return 4

    record = make_record(config, outputs, metrics)
    store_record(record, os.path.join(run_dir, "record.json"))
    print(run_dir)
    return code


if __name__ == "__main__":
    sys.exit(main())
