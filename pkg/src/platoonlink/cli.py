"""Command-line surface.

Every subcommand reads one scenario file (or the built-in defaults),
runs the corresponding analysis, and emits a machine-readable result
table whose metadata block (seed, version, tolerances, scenario hash)
is sufficient to reproduce the run exactly.

    platoonlink [--scenario FILE] [--seed N] [--k X] [--out PATH]
                [--format csv|json] <command>

Commands: stability | sweep | optimize | simulate | montecarlo |
delay | reliability.  Exit codes: 0 ok, 2 scenario/parse error,
3 infeasible gains, 4 unstable queue or delay budget exceeded,
5 numerical failure or collision.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from . import reliability as rel_mod
from . import sim as sim_mod
from . import sinr as sinr_mod
from .delay import end_to_end_delay, processor_delay, transceiver_delay
from .exceptions import (CollisionError, DelayBoundError, DivergenceError,
                         GainInfeasibleError, InfeasibleBoxError,
                         NonRealSpectrumError, NumericalError,
                         PlatoonLinkError, ProvisoFailedError, ScenarioError,
                         UnstableQueueError)
from .optimize import GainBox, grid_search_oracle, optimize_gains, optimize_lower_bound
from .scenario import apply_sweep_value, default_scenario, load_scenario
from .sinr import SinrModel, service_moments
from .stability import stability_report

SCENARIO_DIR_ENV = "PLATOONLINK_SCENARIOS"

_EXIT_CODES = (
    ((ScenarioError,), 2),
    ((GainInfeasibleError, NonRealSpectrumError, InfeasibleBoxError), 3),
    ((UnstableQueueError, DelayBoundError, ProvisoFailedError), 4),
    ((NumericalError, CollisionError, DivergenceError), 5),
)


@dataclass
class ResultTable:
    """Rectangular result with unit-annotated column names."""

    columns: list
    rows: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def add(self, *values):
        if len(values) != len(self.columns):
            raise ValueError("row width does not match columns")
        self.rows.append(list(values))

    def to_csv(self):
        lines = [f"# {key} = {val}" for key, val in self.metadata.items()]
        lines.append(",".join(self.columns))
        for row in self.rows:
            lines.append(",".join(_cell(v) for v in row))
        return "\n".join(lines) + "\n"

    def to_json(self):
        payload = {"metadata": self.metadata, "columns": self.columns,
                   "rows": self.rows}
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"

    def render(self, fmt):
        return self.to_csv() if fmt == "csv" else self.to_json()


def _cell(value):
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _metadata(args, scenario, command):
    return {
        "command": command,
        "version": __version__,
        "scenario": args.scenario or "<defaults>",
        "scenario_sha256": scenario.source_hash,
        "seed": _seed(args, scenario),
        "razumikhin_k": args.k,
        "format": args.format,
        "quad_epsrel": sinr_mod._QUAD_EPSREL,
        "truncation_tol": sinr_mod._TRUNC_TOL,
    }


def _seed(args, scenario):
    return scenario.simulation.seed if args.seed is None else args.seed


def _model(scenario):
    return SinrModel(scene=scenario.highway, radio=scenario.radio,
                     follower_count=scenario.platoon.follower_count)


def _emit(table, args):
    text = table.render(args.format)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# subcommands


def cmd_stability(args, scenario):
    report = stability_report(scenario.platoon, k=args.k)
    table = ResultTable(
        columns=["tau1_s", "tau2_s", "tau_min_s", "plant_gain_ok",
                 "string_gain_ok", "razumikhin_k"],
        metadata=_metadata(args, scenario, "stability"))
    table.add(report.tau1, report.tau2, report.tau_min,
              report.plant_gain_condition_ok,
              report.string_gain_condition_ok, report.razumikhin_k)
    _emit(table, args)
    if report.tau1 is None or report.tau2 is None:
        for name, msg in sorted(report.diagnostics.items()):
            print(f"{name}: {msg}", file=sys.stderr)
        raise GainInfeasibleError("; ".join(
            f"{k}: {v}" for k, v in sorted(report.diagnostics.items())))


def cmd_delay(args, scenario):
    moments = service_moments(_model(scenario))
    queue = scenario.queue
    t1 = processor_delay(queue)
    t2 = transceiver_delay(queue, moments)
    table = ResultTable(
        columns=["mean_service_s", "var_service_s2", "service_rate_pps",
                 "rho2", "t1_s", "t2_s", "end_to_end_s", "truncated_mass"],
        metadata=_metadata(args, scenario, "delay"))
    table.add(moments.mean, moments.variance, moments.service_rate,
              moments.utilization(queue.arrival_rate), t1, t2, t1 + t2,
              moments.truncated_mass)
    _emit(table, args)


def cmd_reliability(args, scenario):
    report = rel_mod.reliability_report(
        scenario.platoon, _model(scenario), scenario.queue, k=args.k,
        which_stability=args.which)
    table = ResultTable(
        columns=["which_stability", "tau_used_s", "mean_delay_s",
                 "markov_term", "chernoff_term", "lower_bound", "approx",
                 "bound_error"],
        metadata=_metadata(args, scenario, "reliability"))
    table.add(report.which_stability, report.tau_used, report.mean_delay,
              report.markov_term, report.chernoff_term, report.lower_bound,
              report.approx, report.bound_error)
    _emit(table, args)


def _sweep_row(scenario, k, moments_cache):
    """All reliability quantities for one sweep point."""
    stab = stability_report(scenario.platoon, k=k)
    model = _model(scenario)
    out = {"tau1_s": stab.tau1, "tau2_s": stab.tau2, "tau_min_s": stab.tau_min,
           "status": "ok", "t1_s": None, "t2_s": None, "t_total_s": None,
           "approx_plant": None, "approx_string": None, "approx_min": None,
           "lb_plant": None, "lb_string": None, "lb_min": None}
    for name, tau in (("plant", stab.tau1), ("string", stab.tau2),
                      ("min", stab.tau_min)):
        if tau is not None:
            out[f"approx_{name}"] = rel_mod.reliability_approx(model, tau)
    if stab.tau1 is None and stab.tau2 is None:
        out["status"] = "gain-infeasible"
        return out
    try:
        if model not in moments_cache:
            moments_cache[model] = service_moments(model)
        moments = moments_cache[model]
        delay = end_to_end_delay(scenario.queue, moments)
        out["t1_s"] = delay.t1_mean
        out["t2_s"] = delay.t2_mean
        out["t_total_s"] = delay.end_to_end
        for name, tau in (("plant", stab.tau1), ("string", stab.tau2),
                          ("min", stab.tau_min)):
            if tau is None:
                continue
            try:
                bound, _, _ = rel_mod.reliability_lower_bound(
                    delay.end_to_end, tau)
                out[f"lb_{name}"] = bound
            except DelayBoundError:
                out[f"lb_{name}"] = 0.0
                out["status"] = "delay-exceeds-budget"
    except UnstableQueueError:
        out["status"] = "unstable-queue"
    return out


def cmd_sweep(args, scenario):
    if scenario.sweep is None:
        raise ScenarioError("sweep command needs a [sweep] section")
    sweep = scenario.sweep
    columns = ["sweep_parameter", "sweep_value", "tau1_s", "tau2_s",
               "tau_min_s", "t1_s", "t2_s", "t_total_s", "approx_plant",
               "approx_string", "approx_min", "lb_plant", "lb_string",
               "lb_min", "status"]
    table = ResultTable(columns=columns,
                        metadata=_metadata(args, scenario, "sweep"))
    moments_cache = {}
    for value in sweep.values:
        point = apply_sweep_value(scenario, sweep.parameter, value)
        row = _sweep_row(point, args.k, moments_cache)
        label = (f"{value[0]}/{value[1]}" if sweep.parameter == "gain_pair"
                 else value)
        table.add(sweep.parameter, label, row["tau1_s"], row["tau2_s"],
                  row["tau_min_s"], row["t1_s"], row["t2_s"],
                  row["t_total_s"], row["approx_plant"],
                  row["approx_string"], row["approx_min"], row["lb_plant"],
                  row["lb_string"], row["lb_min"], row["status"])
    _emit(table, args)


def cmd_optimize(args, scenario):
    opt = scenario.optimization
    box = GainBox(a_min=opt.a_min, a_max=opt.a_max,
                  b_min=opt.b_min, b_max=opt.b_max)
    result = optimize_gains(box, scenario.platoon, k=args.k,
                            method=opt.method, epsilon=opt.epsilon)
    oracle_a, oracle_b, oracle_tau = grid_search_oracle(
        box, scenario.platoon, k=args.k,
        resolution=opt.oracle_resolution)
    gap = abs(result.tau_star - oracle_tau)

    proviso_ok = True
    mean_delay = None
    try:
        model = _model(scenario)
        moments = service_moments(model)
        lb = optimize_lower_bound(box, scenario.platoon, model,
                                  scenario.queue, k=args.k,
                                  method=opt.method, epsilon=opt.epsilon,
                                  moments=moments)
        mean_delay = end_to_end_delay(scenario.queue, moments).end_to_end
    except ProvisoFailedError as exc:
        proviso_ok = False
        mean_delay = exc.mean_delay

    table = ResultTable(
        columns=["a_star", "b_star", "tau_star_s", "oracle_tau_s",
                 "oracle_gap_s", "dual_bound", "iterations", "method",
                 "v1", "v2", "v3", "v4", "lower_bound_proviso_ok",
                 "mean_delay_s"],
        metadata=_metadata(args, scenario, "optimize"))
    table.add(result.a_star, result.b_star, result.tau_star, oracle_tau,
              gap, result.dual_bound, result.iterations, result.method,
              *result.duals, proviso_ok, mean_delay)
    _emit(table, args)


def _initial_states(scenario, rng):
    sim = scenario.simulation
    if sim.initial == "equilibrium":
        return sim_mod.equilibrium_states(scenario.platoon,
                                          velocity=sim.initial_velocity)
    return sim_mod.perturbed_states(scenario.platoon, rng,
                                    spacing_error_range=sim.spacing_error,
                                    velocity_error_range=sim.velocity_error)


def _delay_model(scenario, seed):
    sim = scenario.simulation
    if sim.delay == "fixed":
        return sim_mod.FixedDelay(sim.delay_s)
    if sim.delay == "uniform":
        return sim_mod.UniformDelay(sim.delay_max_s)
    # from_queue: feed DES sojourn times back as link delays
    des = sim_mod.simulate_tandem_queue(
        scenario.queue, sim_mod.sinr_service(_model(scenario)),
        n_packets=20_000, seed=seed)
    return sim_mod.EmpiricalDelay(tuple(des.sojourn))


def cmd_simulate(args, scenario):
    sim = scenario.simulation
    seed = _seed(args, scenario)
    rng = np.random.default_rng(seed)
    states = _initial_states(scenario, rng)
    profile = sim_mod.LeaderProfile(initial=states[0].velocity,
                                    steps=sim.leader_steps)
    run = sim_mod.SimScenario(
        spec=scenario.platoon, initial_states=states,
        delay_model=_delay_model(scenario, seed),
        leader_profile=profile, duration=sim.duration,
        time_step=sim.time_step, rng_seed=seed)
    trace = sim_mod.simulate_platoon(run)

    m = scenario.platoon.follower_count
    columns = (["time_s"]
               + [f"spacing_error_{i}_m" for i in range(1, m + 1)]
               + [f"velocity_error_{i}_mps" for i in range(1, m + 1)])
    table = ResultTable(columns=columns,
                        metadata=_metadata(args, scenario, "simulate"))
    stride = max(1, int(round(0.1 / sim.time_step)))  # 10 Hz trace output
    for idx in range(0, len(trace.times), stride):
        table.add(float(trace.times[idx]),
                  *[float(v) for v in trace.spacing_errors[idx, 1:]],
                  *[float(v) for v in trace.velocity_errors[idx, 1:]])
    _emit(table, args)

    summary = ResultTable(
        columns=["final_max_abs_spacing_error_m"]
        + [f"sup_velocity_error_{i}_mps" for i in range(1, m + 1)],
        metadata=_metadata(args, scenario, "simulate-summary"))
    summary.add(float(np.abs(trace.spacing_errors[-1]).max()),
                *[float(v) for v in trace.sup_velocity_error[1:]])
    sys.stdout.write(summary.render(args.format))

    # divergence check: growing late-run errors mean the delay or the
    # gains are outside the stable region even without a collision
    quarter = max(1, len(trace.times) // 4)
    early = float(np.abs(trace.spacing_errors[:quarter]).max())
    late = float(np.abs(trace.spacing_errors[-quarter:]).max())
    if late > max(3.0 * early, 1.0):
        raise DivergenceError(
            f"platoon spacing errors diverged: late-run max {late:.3g} m "
            f"vs early-run max {early:.3g} m")


def cmd_montecarlo(args, scenario):
    sim = scenario.simulation
    seed = _seed(args, scenario)
    model = _model(scenario)
    lo, hi, step = sim.mc_theta_db
    grid_db = np.arange(lo, hi + 0.5 * step, step)
    grid = 10.0 ** (grid_db / 10.0)
    samples = sim_mod.sample_sinr(model, sim.mc_draws, seed)
    empirical = sim_mod.empirical_ccdf(samples, grid)
    table = ResultTable(
        columns=["theta_db", "theta", "empirical_ccdf", "analytic_ccdf"],
        metadata=_metadata(args, scenario, "montecarlo"))
    for tdb, t, e in zip(grid_db, grid, empirical):
        table.add(float(tdb), float(t), float(e),
                  sinr_mod.sinr_ccdf(float(t), model))
    _emit(table, args)


# ---------------------------------------------------------------------------


def _resolve_scenario(arg):
    if arg is None:
        return default_scenario()
    if not os.path.exists(arg):
        base = os.environ.get(SCENARIO_DIR_ENV)
        if base:
            candidate = os.path.join(base, arg)
            if not os.path.exists(candidate) and not arg.endswith(".toml"):
                candidate += ".toml"
            if os.path.exists(candidate):
                return load_scenario(candidate)
        raise ScenarioError(f"scenario file not found: {arg}")
    return load_scenario(arg)


_COMMANDS = {
    "stability": cmd_stability,
    "sweep": cmd_sweep,
    "optimize": cmd_optimize,
    "simulate": cmd_simulate,
    "montecarlo": cmd_montecarlo,
    "delay": cmd_delay,
    "reliability": cmd_reliability,
}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="platoonlink",
        description="Joint control-stability and wireless-delay analysis "
                    "for vehicular platoons.")
    parser.add_argument("--scenario", help="scenario TOML file (or a name "
                        f"resolved against ${SCENARIO_DIR_ENV})")
    parser.add_argument("--seed", type=int, default=None,
                        help="override the scenario RNG seed")
    parser.add_argument("--out", help="write the result table to this path")
    parser.add_argument("--k", type=float, default=1.01,
                        help="Razumikhin constant k > 1 for the plant "
                             "threshold (default 1.01)")
    parser.add_argument("--format", choices=("csv", "json"), default="csv")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        cmd = sub.add_parser(name)
        if name == "reliability":
            cmd.add_argument("--which", choices=("plant", "string", "both"),
                             default="both")
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        scenario = _resolve_scenario(args.scenario)
        _COMMANDS[args.command](args, scenario)
    except PlatoonLinkError as exc:
        print(f"error: {exc}", file=sys.stderr)
        for classes, code in _EXIT_CODES:
            if isinstance(exc, classes):
                return code
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
