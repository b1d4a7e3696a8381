"""Command-line interface.

Subcommands: gen, spectrum, evolve, optimize, plan run, export.  Exit
codes: 0 on success, 2 for an invalid plan or arguments, 3 when an
evolution aborts on numerical grounds (statevector norm drift).
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import numpy as np

from . import engine, experiments, optimizer, problems, schedules, spectral


@click.group()
@click.option(
    "--deterministic/--no-deterministic",
    default=True,
    help="Fix reduction orders so identical seeds give identical bytes.",
)
@click.option("--threads", type=int, default=1, show_default=True, help="Worker processes for plan execution.")
@click.pass_context
def cli(ctx, deterministic, threads):
    """Guided-quantum-walk simulator for QUBO optimization."""
    ctx.ensure_object(dict)
    ctx.obj["deterministic"] = deterministic
    ctx.obj["threads"] = threads


@cli.command()
@click.argument("kind", type=click.Choice(["exact_cover", "tsp", "garden"]))
@click.option("-n", "n", type=int, default=None, help="Number of binary variables.")
@click.option("-m", "m", type=int, default=None, help="Family size parameter (cities / grid rows).")
@click.option("-p", "p", type=int, default=3, show_default=True, help="Plant varieties (garden only).")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--rescaled/--raw", default=True, help="Map energies onto [0, 100].")
@click.option("--out", type=click.Path(dir_okay=False), required=True)
def gen(kind, n, m, p, seed, rescaled, out):
    """Generate a random problem instance and write its JSON file."""
    problem = problems.generate_instance(
        kind, n=n, m=m, p=p, seed=seed, rescaled=rescaled
    )
    problems.save_instance(problem, out)
    click.echo(f"wrote {out} ({problem.kind}, N={problem.n_vars})")


@cli.command()
@click.argument("instance", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@click.option("--profile-out", type=click.Path(dir_okay=False), default=None,
              help="Also write the binned mean-gap profile CSV.")
def spectrum(instance, out, profile_out):
    """Enumerate all 2^N energies and write the spectrum CSV."""
    problem = problems.load_instance(instance)
    table = experiments.cached_spectrum(problem)
    problems.write_spectrum_csv(table, out)
    click.echo(
        f"wrote {out} (E in [{table.e_min:g}, {table.e_max:g}], "
        f"{int(table.valid.sum())} valid states)"
    )
    if profile_out:
        profile = spectral.build_gap_profile(table)
        spectral.write_profile_csv(profile, profile_out)
        click.echo(f"wrote {profile_out}")


def _build_schedule(variant, total_time, gamma, params, instance_spectrum):
    if variant == "constant":
        if gamma is None:
            raise click.UsageError("--gamma is required for a constant schedule")
        return schedules.ConstantSchedule(gamma, total_time)
    if variant == "linear_qa":
        return schedules.LinearQASchedule(total_time)
    if variant == "bezier_gqw":
        if params is None:
            raise click.UsageError("--params l0,l1,l2,l3,k_start,k_end is required")
        values = [float(v) for v in params.split(",")]
        if len(values) != 6:
            raise click.UsageError("--params needs exactly six comma-separated values")
        return schedules.BezierGqwSchedule(
            schedules.HyperParams.from_array(values), total_time
        )
    if variant == "spectral_oracle":
        profile = spectral.build_gap_profile(instance_spectrum)
        return schedules.SpectralOracleSchedule(profile, total_time)
    raise click.UsageError(f"unknown schedule {variant!r}")


@cli.command()
@click.argument("instance", type=click.Path(exists=True, dir_okay=False))
@click.option("--schedule", "variant",
              type=click.Choice(["constant", "linear_qa", "bezier_gqw", "spectral_oracle"]),
              required=True)
@click.option("-T", "total_time", type=float, required=True, help="Total evolution time.")
@click.option("--dt", type=float, default=1e-3, show_default=True)
@click.option("--gamma", type=float, default=None, help="Hopping rate (constant schedule).")
@click.option("--params", type=str, default=None,
              help="Six schedule hyperparameters, comma separated.")
@click.option("--bins", type=int, default=50, show_default=True, help="Energy histogram bins in the trace.")
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="Trace CSV path.")
@click.option("--state-out", type=click.Path(dir_okay=False), default=None,
              help="Binary statevector dump path.")
def evolve(instance, variant, total_time, dt, gamma, params, bins, out, state_out):
    """Evolve one schedule on one instance; print the final observables."""
    problem = problems.load_instance(instance)
    table = experiments.cached_spectrum(problem)
    sched = _build_schedule(variant, total_time, gamma, params, table)
    config = engine.EvolutionConfig(total_time=total_time, dt=dt, energy_bins=bins)
    state, record = engine.evolve(
        table, sched, config, kind=problem.kind, record_traces=out is not None
    )
    if out:
        engine.write_trace_csv(record, out)
        click.echo(f"wrote {out}")
    if state_out:
        engine.save_statevector(state, state_out)
        click.echo(f"wrote {state_out}")
    click.echo(
        f"T={total_time:g} E_psi={record.e_psi:.6g} "
        f"p_gs={record.p_gs:.6g} s_q={record.s_q:.6g}"
    )


@cli.command()
@click.argument("instance", type=click.Path(exists=True, dir_okay=False))
@click.option("--algorithm", type=click.Choice(["gqw", "qw"]), default="gqw",
              show_default=True)
@click.option("-T", "total_time", type=float, required=True)
@click.option("--dt", type=float, default=1e-3, show_default=True)
@click.option("--restarts", type=int, default=20, show_default=True)
@click.option("--evals", type=int, default=100, show_default=True,
              help="Objective evaluations per restart.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--shots", type=int, default=None,
              help="Sample the objective with this many shots instead of exact E_psi.")
@click.option("--out", type=click.Path(dir_okay=False), default=None,
              help="JSON summary of the optimization outcome.")
def optimize(instance, algorithm, total_time, dt, restarts, evals, seed, shots, out):
    """Tune schedule hyperparameters to minimize the final energy."""
    problem = problems.load_instance(instance)
    table = experiments.cached_spectrum(problem)
    cfg = optimizer.OptimizerConfig(
        n_restarts=restarts, max_evals=evals, seed=seed, shots=shots
    )
    run = optimizer.optimize_gqw if algorithm == "gqw" else optimizer.optimize_qw
    outcome = run(table, problem.kind, total_time, cfg, dt=dt)
    if out:
        with open(out, "w") as fh:
            json.dump(outcome.to_dict(), fh, indent=1)
        click.echo(f"wrote {out}")
    best = np.atleast_1d(outcome.best_params)
    click.echo(
        f"best E_psi={outcome.best_f:.6g} s_q={outcome.best_record.s_q:.6g} "
        f"evals={outcome.eval_count} params={[round(float(v), 6) for v in best]}"
    )


@cli.group()
def plan():
    """Experiment-plan operations."""


@plan.command("run")
@click.argument("plan_file", type=click.Path(exists=True, dir_okay=False))
@click.pass_context
def plan_run(ctx, plan_file):
    """Run every missing cell of a plan; resume is automatic."""
    spec = experiments.load_plan(plan_file)
    threads = ctx.obj.get("threads", 1) if ctx.obj else 1
    if threads > 1:
        spec.workers = threads
    done = []

    def progress(key):
        done.append(key)
        click.echo(f"[{len(done)}] {key[0]} {key[1]} T={key[2]}", err=True)

    report = experiments.run_plan(spec, progress=progress)
    click.echo(f"wrote {report} ({len(done)} new cells)")


@cli.command()
@click.option("--report", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--figure", type=click.Choice(list(experiments.FIGURES)), required=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@click.option("--traces-dir", type=click.Path(file_okay=False), default=None)
def export(report, figure, out, traces_dir):
    """Reshape a report CSV into tidy per-figure data files."""
    experiments.export_figure_data(report, figure, out, traces_dir=traces_dir)
    click.echo(f"wrote {out}")


def main(argv=None):
    try:
        cli(args=argv, standalone_mode=False, obj={})
    except click.exceptions.Abort:
        sys.exit(1)
    except click.ClickException as exc:
        exc.show()
        sys.exit(2)
    except experiments.PlanError as exc:
        click.echo(f"error: invalid plan: {exc}", err=True)
        sys.exit(2)
    except engine.EvolutionAbort as exc:
        click.echo(f"error: numerical abort: {exc}", err=True)
        sys.exit(3)
    sys.exit(0)


if __name__ == "__main__":
    main()
