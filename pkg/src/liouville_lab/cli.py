"""Batch experiment driver.

Each subcommand composes the library into a named experiment, writes
manifest.json (config + content hash + versions; the only file carrying a
timestamp), results.json, results.csv, and a verdicts.json whose entries pair
every measured value with the tolerance it was judged against.  Exit code 0
iff no verdict failed, 2 for invalid configuration, 3 for a runtime numerical
failure (the offending operation is named).
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy.stats import norm as _norm

from . import __version__
from .flows import (
    CounterexampleFlow,
    OdeHamiltonianSpec,
    StrangFlow,
    VerletFlow,
    integrate_counterexample,
    integrate_hamiltonian_ode,
    integrate_interaction,
    integrate_msqg,
    sample_ode_gibbs,
)
from .liouville import (
    CylTestFunction,
    FreeTransportFamily,
    GibbsInteractionFamily,
    PlanarStationaryFamily,
    StationaryFamily,
    construct_omega,
    construct_theta,
    default_test_functions,
    global_fraction,
    integrability_estimate,
    invariance_check,
    liouville_residual,
)
from .measures import Ensemble, Nonlinearity, gibbs_reweight, sample_gaussian, mode_variance
from .projection import (
    check_mollify_bound,
    projected_contraction_check,
    projected_liouville_residual,
)
from .spectral import OperatorKind, SpectralModel, _fnv1a

EXPERIMENTS = (
    "sample", "evolve", "verify-liouville", "verify-invariance", "integrability",
    "counterexample", "project", "mollify", "global-fraction",
)


@dataclass
class ExperimentConfig:
    experiment: str
    # model
    dimension: int = 1
    cutoff: int = 16
    sobolev_s: float = 0.0
    operator_kind: str = "laplacian_plus_one"
    # nonlinearity
    nonlinearity: str = "none"
    power_r: int = 2
    # flow
    flow: str = "strang"            # strang | msqg | ode | counterexample | linear
    t_end: float = 1.0
    dt: float = 1e-3
    dt_fd: float = 1e-2
    delta: float = 1.0
    t_values: tuple = (0.0, 0.5, 1.0)
    # ensemble
    count: int = 10_000
    seed: int = 12345
    # estimator knobs
    n_test_functions: int = 5
    bandwidth: float = 0.3
    projection_rank: int = 4
    eps: float = 0.3
    clip_exponents: tuple = (2, 3, 4, 5, 6)
    # tolerances
    z_max: float = 3.0
    ess_warn_fraction: float = 0.01
    excluded_warn_mass: float = 0.05
    conservation_rtol: float = 1e-6
    mass_rtol: float = 1e-8
    # io
    out: str = "results"
    threads: int = 1

    def validate(self):
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"unknown experiment {self.experiment!r}")
        if self.count < 1:
            raise ValueError("count must be >= 1")
        if self.dt <= 0 or self.dt_fd <= 0:
            raise ValueError("dt and dt_fd must be positive")
        if not 0 < self.delta <= 1:
            raise ValueError("delta must lie in (0, 1]")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")
        if self.nonlinearity not in ("none", "nls_power", "nls_wick", "hartree", "hartree_wick"):
            raise ValueError(f"unknown nonlinearity {self.nonlinearity!r}")
        self.model()  # validates dimension/cutoff/sobolev_s/operator_kind
        return self

    def model(self) -> SpectralModel:
        return SpectralModel(self.dimension, self.cutoff, self.sobolev_s,
                             OperatorKind(self.operator_kind))


def load_config(path: str | None, overrides: dict) -> ExperimentConfig:
    data: dict = {}
    if path:
        text = Path(path).read_text()
        if path.endswith(".json"):
            data = json.loads(text)
        else:
            try:
                import tomllib  # Python >= 3.11
            except ModuleNotFoundError:
                import tomli as tomllib
            try:
                data = tomllib.loads(text)
            except Exception as exc:  # tomli reports line/column in the message
                raise ValueError(f"config parse error in {path}: {exc}") from exc
    flat = {}
    for key, value in data.items():
        if isinstance(value, dict):
            flat.update(value)
        else:
            flat[key] = value
    flat.update({k: v for k, v in overrides.items() if v is not None})
    known = set(ExperimentConfig.__dataclass_fields__)
    unknown = set(flat) - known
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    for tup_key in ("t_values", "clip_exponents"):
        if tup_key in flat:
            flat[tup_key] = tuple(flat[tup_key])
    return ExperimentConfig(**flat).validate()


# -- output helpers -----------------------------------------------------------


def _fmt(x) -> str:
    if isinstance(x, float):
        return f"{x:.17g}"
    return str(x)


def write_csv(path: Path, rows: list[dict]) -> None:
    if not rows:
        path.write_text("")
        return
    cols = list(rows[0].keys())
    lines = [",".join(cols)]
    for row in rows:
        lines.append(",".join(_fmt(row.get(c, "")) for c in cols))
    path.write_text("\n".join(lines) + "\n")


def verdict(name: str, measured: float, tolerance: float, comparator: str = "<=",
            warn_only: bool = False) -> dict:
    ok = measured <= tolerance if comparator == "<=" else measured >= tolerance
    status = "pass" if ok else ("warn" if warn_only else "fail")
    return {"name": name, "measured": measured, "tolerance": tolerance,
            "comparator": comparator, "status": status}


def _ess_verdicts(cfg: ExperimentConfig, diag: dict) -> list[dict]:
    return [verdict("ess_fraction", diag["ess_fraction"], cfg.ess_warn_fraction,
                    comparator=">=", warn_only=True)]


# -- families -----------------------------------------------------------------


def _gibbs_family(cfg: ExperimentConfig, sign_flip: bool = False):
    model = cfg.model()
    nl = Nonlinearity(model, cfg.nonlinearity, r=cfg.power_r)
    ens = sample_gaussian(model, cfg.count, cfg.seed)
    base, diag = gibbs_reweight(ens, nl)
    return GibbsInteractionFamily(base, nl, sign_flip=sign_flip), diag


# -- experiments ---------------------------------------------------------------


def run_sample(cfg: ExperimentConfig, outdir: Path):
    model = cfg.model()
    ens = sample_gaussian(model, cfg.count, cfg.seed)
    diag = {"ess_fraction": 1.0}
    if cfg.nonlinearity != "none":
        nl = Nonlinearity(model, cfg.nonlinearity, r=cfg.power_r)
        ens, diag = gibbs_reweight(ens, nl)
    ens.save(outdir / "ensemble")
    var = np.mean(np.abs(ens.coeffs) ** 2, axis=0)
    target = mode_variance(model)
    se = target * np.sqrt(2.0 / cfg.count)
    zs = (var - target) / se
    rows = [{"mode_index": i + 1, "empirical_var": float(var[i]),
             "target_var": float(target[i]), "z": float(zs[i])} for i in range(model.size)]
    verdicts = [verdict("max_mode_variance_abs_z", float(np.max(np.abs(zs))), 4.0)]
    if cfg.nonlinearity != "none":
        verdicts += _ess_verdicts(cfg, diag)
    return rows, {"diagnostics": diag}, verdicts


def run_evolve(cfg: ExperimentConfig, outdir: Path):
    model = cfg.model()
    rows, verdicts = [], []
    if cfg.flow == "strang":
        nl = Nonlinearity(model, cfg.nonlinearity, r=cfg.power_r)
        u0 = sample_gaussian(model, 1, cfg.seed).coeffs[0]
        traj = integrate_interaction(model, nl, u0, cfg.t_end, cfg.dt,
                                     log_every=max(1, int(round(cfg.t_end / cfg.dt)) // 200))
        traj.to_csv(outdir / "trajectory.csv")
        mass = traj.invariants_log["l2_mass"]
        ham = traj.invariants_log["hamiltonian"]
        mass_drift = float(np.max(np.abs(mass - mass[0])) / abs(mass[0]))
        ham_drift = float(np.max(np.abs(ham - ham[0])) / max(abs(ham[0]), 1e-30))
        verdicts.append(verdict("l2_mass_relative_drift", mass_drift, cfg.mass_rtol))
        verdicts.append(verdict("hamiltonian_relative_drift", ham_drift, 1e-3))
        rows = [{"t": float(t), "l2_mass": float(m), "hamiltonian": float(h)}
                for t, m, h in zip(traj.times, mass, ham)]
    elif cfg.flow == "msqg":
        u0 = sample_gaussian(model, 1, cfg.seed).coeffs[0]
        traj = integrate_msqg(model, cfg.delta, u0, cfg.t_end, cfg.dt,
                              log_every=max(1, int(round(cfg.t_end / cfg.dt)) // 200))
        traj.to_csv(outdir / "trajectory.csv")
        ens_log = traj.invariants_log["enstrophy"]
        drift = float(np.max(np.abs(ens_log - ens_log[0])) / abs(ens_log[0]))
        verdicts.append(verdict("enstrophy_relative_drift", drift, cfg.conservation_rtol))
        rows = [{"t": float(t), "enstrophy": float(e), "quad_energy": float(q)}
                for t, e, q in zip(traj.times, ens_log, traj.invariants_log["quad_energy"])]
    elif cfg.flow == "ode":
        spec = OdeHamiltonianSpec(d=5, phi_kind="harmonic", alpha=0.4)
        states, _ = sample_ode_gibbs(spec, 1, cfg.seed)
        traj = integrate_hamiltonian_ode(spec, states[0], cfg.t_end, cfg.dt)
        traj.to_csv(outdir / "trajectory.csv")
        e = traj.invariants_log["energy"]
        drift = float(np.max(np.abs(e - e[0])) / abs(e[0]))
        verdicts.append(verdict("energy_relative_drift", drift, 1e-3))
        rows = [{"t": float(t), "energy": float(v)} for t, v in zip(traj.times, e)]
    elif cfg.flow == "counterexample":
        traj = integrate_counterexample(np.array([1.0, 0.0]), cfg.t_end, cfg.dt)
        traj.to_csv(outdir / "trajectory.csv")
        b = traj.blowup or {"time_lower": np.nan, "time_upper": np.nan}
        rows = [{"time_lower": b["time_lower"], "time_upper": b["time_upper"]}]
        if traj.blowup:
            width = b["time_upper"] - b["time_lower"]
            inside = float(b["time_lower"] < 1.0 <= b["time_upper"])
            verdicts.append(verdict("bracket_width", width, 1e-3))
            verdicts.append(verdict("bracket_contains_true_time", inside, 1.0, comparator=">="))
    else:
        raise ValueError(f"evolve does not support flow {cfg.flow!r}")
    return rows, {}, verdicts


def run_verify_liouville(cfg: ExperimentConfig, outdir: Path):
    fam, diag = _gibbs_family(cfg)
    model = cfg.model()
    Fs = default_test_functions(model, cfg.n_test_functions)
    rows = []
    for t in cfg.t_values:
        for F in Fs:
            r = liouville_residual(fam, F, t, cfg.dt_fd)
            rows.append({"experiment": cfg.experiment, "t": t, "F_descriptor": F.name,
                         **{k: r[k] for k in ("lhs", "rhs", "residual", "se_lhs", "se_rhs",
                                              "se_residual", "z", "excluded_mass")}})
    zmax = float(np.max(np.abs([row["z"] for row in rows])))
    verdicts = [verdict("max_abs_z", zmax, cfg.z_max)] + _ess_verdicts(cfg, diag)
    return rows, {"diagnostics": diag}, verdicts


def run_verify_invariance(cfg: ExperimentConfig, outdir: Path):
    model = cfg.model()
    nl = Nonlinearity(model, cfg.nonlinearity, r=cfg.power_r)
    base, diag = gibbs_reweight(sample_gaussian(model, cfg.count, cfg.seed), nl)
    Fs = default_test_functions(model, cfg.n_test_functions)
    t_grid = [t for t in cfg.t_values if t > 0]
    rows_dt = invariance_check(StrangFlow(model, nl, cfg.dt), base, Fs, t_grid,
                               threads=cfg.threads)
    rows_half = invariance_check(StrangFlow(model, nl, cfg.dt / 2), base, Fs, t_grid,
                                 threads=cfg.threads)
    rows, verdicts = [], []
    worst_margin = -np.inf
    for r, rh in zip(rows_dt, rows_half):
        dt2_term = abs(4.0 / 3.0 * (r["drift_stationary"] - rh["drift_stationary"]))
        tol = 3.0 * r["se_stationary"] + dt2_term
        rows.append({**r, "dt2_term": dt2_term, "tolerance": tol})
        worst_margin = max(worst_margin, abs(r["drift_stationary"]) - tol)
    verdicts.append(verdict("worst_drift_minus_tolerance", float(worst_margin), 0.0))
    excl = max(r["excluded_mass"] for r in rows_dt)
    verdicts.append(verdict("excluded_mass", float(excl), cfg.excluded_warn_mass,
                            warn_only=True))
    verdicts += _ess_verdicts(cfg, diag)
    return rows, {"diagnostics": diag}, verdicts


def run_integrability(cfg: ExperimentConfig, outdir: Path):
    omega = lambda t: 1.0 + t * t
    rows, verdicts = [], []
    if cfg.flow == "counterexample":
        fam = PlanarStationaryFamily.importance_gaussian(cfg.count, cfg.seed)
        grid = np.array([-1.0, 1.0])
        values = []
        for m in cfg.clip_exponents:
            out = integrability_estimate(fam, grid, omega, clip=10.0**m)
            values.append(out["value"])
            rows.append({"clip_exponent": m, "estimate": out["value"]})
        growth = np.diff(values)
        verdicts.append(verdict("min_clip_growth", float(growth.min()), 0.0, comparator=">="))
        return rows, {"clip_values": values}, verdicts
    fam, diag = _gibbs_family(cfg)
    windows = (cfg.t_end, 2 * cfg.t_end, 4 * cfg.t_end)
    values = []
    last = None
    for T in windows:
        grid = np.linspace(-T, T, int(8 * T) + 1)
        out = integrability_estimate(fam, grid, omega)
        values.append(out["value"])
        last = (grid, out)
        rows.append({"window": T, "estimate": out["value"],
                     "inner_mean_t0": float(out["inner_means"][len(out["inner_means"]) // 2]),
                     "constancy_warning": out["constancy_warning"]})
    # constructive omega/theta profiles for the figure set
    grid, out = last
    half = grid >= 0
    om = construct_omega(grid[half], out["inner_means"][half],
                         M=max(float(np.sum(out["inner_means"][half])) * np.diff(grid)[0] / 8,
                               1e-9))
    norms, wts = fam.vnorm(0.0)
    th = construct_theta(norms, wts)
    (outdir / "omega_theta.json").write_text(json.dumps({
        "omega": {"knots": om.knots.tolist(), "values": om.values.tolist()},
        "theta": {"levels": th.levels.tolist(), "slopes": th.slopes.tolist(),
                  "knot_values": th.knot_values.tolist()},
    }, sort_keys=True))
    gap = abs(values[-1] - values[-2]) / max(values[-1], 1e-30)
    verdicts.append(verdict("cauchy_relative_gap", float(gap), 0.01))
    verdicts.append(verdict("inner_mean_constancy_warnings",
                            float(sum(r["constancy_warning"] for r in rows)), 0.0,
                            warn_only=True))
    verdicts += _ess_verdicts(cfg, diag)
    return rows, {"window_values": values}, verdicts


def run_counterexample(cfg: ExperimentConfig, outdir: Path):
    rng = np.random.Generator(np.random.Philox(key=cfg.seed))
    states = rng.standard_normal((cfg.count, 2))
    out = CounterexampleFlow(cfg.dt if cfg.dt < 1 else 1e-2).evolve(
        states, cfg.t_end, threads=cfg.threads)
    frac = float(out["blown"].mean())
    target = float(1.0 - _norm.cdf(1.0 / cfg.t_end))
    se = float(np.sqrt(target * (1 - target) / cfg.count))
    traj = integrate_counterexample(np.array([1.0, 0.0]), min(cfg.t_end, 3.0), 1e-2)
    b = traj.blowup
    # per-sample event records feed the blowup-time histogram figure
    event_rows = [{"sample": i, "q0": float(states[i, 0]), "blown": int(out["blown"][i]),
                   "time_lower": float(out["bracket_lo"][i]),
                   "time_upper": float(out["bracket_hi"][i])}
                  for i in range(cfg.count)]
    write_csv(outdir / "blowup_times.csv", event_rows)
    t_grid = np.linspace(0.05 * cfg.t_end, cfg.t_end, 60)
    oracle_curve = {"t": [float(t) for t in t_grid],
                    "cdf": [float(1.0 - _norm.cdf(1.0 / t)) for t in t_grid]}
    rows = [{"blowup_fraction": frac, "oracle": target, "binomial_se": se,
             "bracket_lower": b["time_lower"], "bracket_upper": b["time_upper"],
             "p_escape_count": int(np.sum(~np.isnan(out["p_escape_time"])))}]
    verdicts = [
        verdict("fraction_abs_error", abs(frac - target), 3 * se),
        verdict("bracket_width", b["time_upper"] - b["time_lower"], 1e-3),
        verdict("bracket_contains_one", float(b["time_lower"] < 1.0 <= b["time_upper"]),
                1.0, comparator=">="),
    ]
    return rows, {"fraction": frac, "oracle": target, "oracle_cdf": oracle_curve}, verdicts


def run_project(cfg: ExperimentConfig, outdir: Path):
    fam, diag = _gibbs_family(cfg)
    model = cfg.model()
    F = CylTestFunction(model, [1, 3], "gauss_bump", a=[0.7, 1.0], c=[0.2, 0.4])
    rows, verdicts = [], []
    last = None
    for h in (4 * cfg.bandwidth, 2 * cfg.bandwidth, cfg.bandwidth):
        r = projected_liouville_residual(fam, cfg.projection_rank, F, 0.5, cfg.dt_fd,
                                         bandwidth=h)
        rows.append({k: r[k] for k in ("F", "t", "n", "bandwidth", "lhs", "rhs", "residual",
                                       "se_lhs", "se_rhs", "z", "mean_query_ess",
                                       "unsupported_queries")})
        last = r
    verdicts.append(verdict("abs_z_at_smallest_bandwidth", abs(last["z"]), cfg.z_max))
    contraction = projected_contraction_check(fam, cfg.projection_rank, 0.5, cfg.bandwidth)
    rows.append({"F": "contraction", "t": 0.5, "n": cfg.projection_rank,
                 "bandwidth": cfg.bandwidth, "lhs": contraction["lhs"],
                 "rhs": contraction["rhs"], "residual": contraction["lhs"] - contraction["rhs"],
                 "se_lhs": contraction["se"], "se_rhs": 0.0, "z": 0.0,
                 "mean_query_ess": 0.0, "unsupported_queries": 0})
    verdicts.append(verdict("contraction_lhs_minus_rhs",
                            contraction["lhs"] - contraction["rhs"],
                            3.0 * contraction["se"]))
    verdicts += _ess_verdicts(cfg, diag)
    return rows, {"diagnostics": diag}, verdicts


def run_mollify(cfg: ExperimentConfig, outdir: Path):
    rng = np.random.Generator(np.random.Philox(key=cfg.seed))
    x = rng.standard_normal((cfg.count, 2))
    v = np.stack([x[:, 1], -x[:, 0]], axis=1)
    res = check_mollify_bound(x, v, np.ones(cfg.count), eps=cfg.eps)
    rows = [{"eps": cfg.eps, **res}]
    verdicts = [
        verdict("bound_slack", res["slack"], -1e-3, comparator=">="),
        verdict("mollified_mass_error", abs(res["mass"] - 1.0), 1e-3),
    ]
    return rows, res, verdicts


def run_global_fraction(cfg: ExperimentConfig, outdir: Path):
    rows, verdicts = [], []
    if cfg.flow == "counterexample":
        rng = np.random.Generator(np.random.Philox(key=cfg.seed))
        states = rng.standard_normal((cfg.count, 2))
        res = global_fraction(CounterexampleFlow(1e-2), states, cfg.t_end,
                              threads=cfg.threads)
        target = float(_norm.cdf(1.0 / cfg.t_end))
        se = float(np.sqrt(target * (1 - target) / cfg.count))
        rows.append({"fraction": res["fraction"], "oracle": target, "binomial_se": se})
        verdicts.append(verdict("fraction_abs_error", abs(res["fraction"] - target), 3 * se))
    elif cfg.flow == "strang":
        model = cfg.model()
        nl = Nonlinearity(model, cfg.nonlinearity, r=cfg.power_r)
        base, diag = gibbs_reweight(sample_gaussian(model, cfg.count, cfg.seed), nl)
        res = global_fraction(StrangFlow(model, nl, cfg.dt), base.coeffs, cfg.t_end,
                              weights=base.weights, threads=cfg.threads)
        rows.append({"fraction": res["fraction"], "oracle": 1.0, "binomial_se": 0.0})
        verdicts.append(verdict("fraction", res["fraction"], 1.0, comparator=">="))
        verdicts += _ess_verdicts(cfg, diag)
    elif cfg.flow == "ode":
        spec = OdeHamiltonianSpec(d=5, phi_kind="harmonic", alpha=0.4)
        states, w = sample_ode_gibbs(spec, cfg.count, cfg.seed)
        res = global_fraction(VerletFlow(spec, cfg.dt), states, cfg.t_end, weights=w,
                              threads=cfg.threads)
        rows.append({"fraction": res["fraction"], "oracle": 1.0,
                     "binomial_se": res.get("singular_mass", 0.0)})
        total = res["fraction"] + res.get("singular_mass", 0.0)
        verdicts.append(verdict("fraction_plus_singular_mass", float(total), 1.0 - 1e-12,
                                comparator=">="))
        verdicts.append(verdict("singular_mass", res.get("singular_mass", 0.0),
                                cfg.excluded_warn_mass, warn_only=True))
    else:
        raise ValueError(f"global-fraction does not support flow {cfg.flow!r}")
    return rows, {}, verdicts


RUNNERS = {
    "sample": run_sample,
    "evolve": run_evolve,
    "verify-liouville": run_verify_liouville,
    "verify-invariance": run_verify_invariance,
    "integrability": run_integrability,
    "counterexample": run_counterexample,
    "project": run_project,
    "mollify": run_mollify,
    "global-fraction": run_global_fraction,
}


def run(cfg: ExperimentConfig) -> int:
    outdir = Path(cfg.out)
    outdir.mkdir(parents=True, exist_ok=True)
    config_canon = json.dumps(asdict(cfg), sort_keys=True)
    manifest = {
        "config": asdict(cfg),
        "config_hash": _fnv1a(config_canon.encode()),
        "versions": {
            "liouville_lab": __version__,
            "python": sys.version.split()[0],
            "numpy": np.__version__,
        },
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S"),
    }
    (outdir / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))
    try:
        rows, summary, verdicts = RUNNERS[cfg.experiment](cfg, outdir)
    except (ValueError, KeyError) as exc:
        print(f"error: numerical failure in experiment {cfg.experiment!r}: {exc}",
              file=sys.stderr)
        return 3
    write_csv(outdir / "results.csv", rows)
    payload = {"experiment": cfg.experiment, "summary": summary, "verdicts": verdicts}
    (outdir / "results.json").write_text(json.dumps(payload, indent=2, sort_keys=True))
    failed = False
    for v in verdicts:
        print(f"[{v['status']:4s}] {v['name']}: measured={_fmt(v['measured'])} "
              f"{v['comparator']} tolerance={_fmt(v['tolerance'])}")
        failed |= v["status"] == "fail"
    return 1 if failed else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="liouville-lab",
                                     description="transport-identity experiments")
    sub = parser.add_subparsers(dest="experiment", required=True)
    for name in EXPERIMENTS:
        p = sub.add_parser(name)
        p.add_argument("--config", default=None, help="TOML or JSON config file")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", default=None)
        p.add_argument("--threads", type=int, default=None)
        p.add_argument("--count", type=int, default=None)
        p.add_argument("--t-end", dest="t_end", type=float, default=None)
        p.add_argument("--dt", type=float, default=None)
        p.add_argument("--nonlinearity", default=None)
        p.add_argument("--flow", default=None)
        p.add_argument("--cutoff", type=int, default=None)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    overrides = {k: v for k, v in vars(args).items() if k != "config"}
    try:
        cfg = load_config(args.config, overrides)
    except (ValueError, OSError) as exc:
        print(f"error: invalid configuration: {exc}", file=sys.stderr)
        return 2
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
