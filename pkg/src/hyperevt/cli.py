"""Command line interface.

Subcommands: simulate (dump a series or raw states), ei (extremal index
from a file or a configured system), gev (block-maxima fit), theta
(closed-form prediction), diagnose (short-return / escape-rate probes),
replicate (bundled experiment recipes).

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numerical
or inconclusive result.
"""

from __future__ import annotations

import functools
import json
import sys
from importlib import resources
from pathlib import Path

import click

from . import diagnostics as diag
from .config import build_experiment, load_config
from .errors import HyperevtError
from .evt import (
    block_maxima,
    estimate_ei,
    fit_gev,
    read_series_csv,
)
from .experiment import (
    evl_to_csv,
    result_to_csv,
    result_to_summary,
    run_evl,
    run_experiment,
    run_sweep,
    sweep_to_csv,
)
from .systems.series import generate_series, state_trajectory
from .systems.trajio import save_trajectory


def _handle_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except HyperevtError as e:
            click.echo(f"error: {e}", err=True)
            sys.exit(e.exit_code)

    return wrapper


def _experiment_from(path):
    return build_experiment(load_config(path), label=Path(path).stem)


@click.group()
def main():
    """Extreme value statistics for hyperbolic dynamical systems."""


@main.command()
@click.option("--config", "-c", "config_path", required=True, type=click.Path())
@click.option("--output", "-o", required=True, type=click.Path())
@click.option("--states", is_flag=True, help="dump raw states (binary) instead of the observable series")
@click.option("--realization", default=0, show_default=True)
@_handle_errors
def simulate(config_path, output, states, realization):
    """Generate one realization and dump it to a file.

    The observable series is written as one-column CSV; --states writes
    the raw state trajectory in the binary format described in
    docs/formats.md.
    """
    cfg = _experiment_from(config_path)
    if states:
        traj = state_trajectory(
            cfg.system, cfg.n, seed=cfg.seed, index=realization, burn_in=cfg.burn_in
        )
        save_trajectory(output, traj)
    else:
        series = generate_series(cfg.system, None, cfg.n, cfg.observable, seed=cfg.seed)
        with open(output, "w", encoding="utf-8") as fh:
            fh.write("value\n")
            for v in series:
                fh.write(f"{float(v)!r}\n")
    click.echo(f"wrote {output}")


@main.command()
@click.option("--config", "-c", "config_path", type=click.Path())
@click.option("--input", "-i", "input_path", type=click.Path())
@click.option("--method", default=None, help="suveges | blocks | runs")
@click.option("--quantile", type=float, default=None)
@click.option("--cluster-gap", type=int, default=None)
@click.option("--block-len", type=int, default=None)
@click.option("--run-gap", type=int, default=None)
@click.option("--output", "-o", type=click.Path(), default=None)
@_handle_errors
def ei(config_path, input_path, method, quantile, cluster_gap, block_len, run_gap, output):
    """Estimate the extremal index from a series file or a configured system."""
    from .errors import ConfigError

    params = {}
    if cluster_gap is not None:
        params["cluster_gap"] = cluster_gap
    if block_len is not None:
        params["block_len"] = block_len
    if run_gap is not None:
        params["run_gap"] = run_gap

    rows = []
    if input_path:
        series = read_series_csv(input_path)
        level = quantile if quantile is not None else 0.98
        est = estimate_ei(series, level, method=method or "suveges", **params)
        rows.append((est, level))
    elif config_path:
        cfg = _experiment_from(config_path)
        level = quantile if quantile is not None else cfg.quantile_level
        merged = dict(cfg.estimator_params)
        merged.update(params)
        from .systems.series import observable_trajectory_batch

        phi = observable_trajectory_batch(
            cfg.system, cfg.observable, cfg.n,
            n_realizations=cfg.n_realizations, seed=cfg.seed, burn_in=cfg.burn_in,
        )
        for b in range(cfg.n_realizations):
            est = estimate_ei(phi[:, b], level, method=method or cfg.estimator, **merged)
            rows.append((est, level))
    else:
        raise ConfigError("ei needs --input FILE or --config FILE")

    lines = ["method,threshold,quantile_level,theta_hat,n_exceedances"]
    for est, level in rows:
        lines.append(
            f"{est.method},{est.threshold!r},{level!r},{est.theta_hat!r},{est.n_exceedances}"
        )
    text = "\n".join(lines) + "\n"
    if output:
        Path(output).write_text(text, encoding="utf-8")
        click.echo(f"wrote {output}")
    else:
        click.echo(text, nl=False)


@main.command()
@click.option("--input", "-i", "input_path", type=click.Path(), required=True,
              help="one-column CSV; a raw series unless --maxima")
@click.option("--block-len", type=int, default=100, show_default=True)
@click.option("--maxima", is_flag=True, help="input already holds block maxima")
@_handle_errors
def gev(input_path, block_len, maxima):
    """Fit the generalized extreme value distribution to block maxima."""
    data = read_series_csv(input_path)
    m = data if maxima else block_maxima(data, block_len)
    fit = fit_gev(m)
    click.echo(json.dumps(
        {"location": fit.location, "scale": fit.scale, "shape": fit.shape,
         "n_maxima": int(m.size)},
        indent=2,
    ))


@main.command()
@click.option("--config", "-c", "config_path", required=True, type=click.Path())
@_handle_errors
def theta(config_path):
    """Print the closed-form extremal index prediction as JSON."""
    from .theory import predict_for

    cfg = _experiment_from(config_path)
    pred = predict_for(cfg.system, cfg.observable, q_max=cfg.q_max,
                       alignment_tol=cfg.alignment_tol)
    if pred is None:
        click.echo(json.dumps({"theta": None, "case": "no-closed-form"}, indent=2))
        sys.exit(4)
    click.echo(json.dumps(pred.as_dict(), indent=2))
    if pred.inconclusive:
        sys.exit(4)


@main.command()
@click.option("--config", "-c", "config_path", required=True, type=click.Path())
@click.option("--probe", type=click.Choice(["aq", "short-returns"]), default="aq",
              show_default=True)
@click.option("--q", type=int, default=None,
              help="escape horizon (default: 1 for aq, 0 for short-returns)")
@click.option("--j-max", type=int, default=20, show_default=True)
@click.option("--samples", type=int, default=10_000, show_default=True)
@click.option("--n", "n_level", type=int, default=None,
              help="threshold scale n for u_n(tau); defaults to run.n")
@click.option("--tau", type=float, default=1.0, show_default=True)
@click.option("--output", "-o", type=click.Path(), default=None)
@_handle_errors
def diagnose(config_path, probe, q, j_max, samples, n_level, tau, output):
    """Monte-Carlo probes: escape-rate ratio (aq) or short-return sums."""
    cfg = _experiment_from(config_path)
    n = n_level if n_level is not None else cfg.n
    if probe == "aq":
        res = diag.aq_ratio(cfg.system, cfg.observable,
                            1 if q is None else q, n, samples, cfg.seed, tau=tau)
        click.echo(json.dumps(
            {"probe": "aq", "q": res.q, "ratio": res.ratio, "std_error": res.std_error,
             "n_exceedances": res.n_exceedances, "threshold": res.threshold},
            indent=2,
        ))
        return
    rep = diag.short_return_sum(cfg.system, cfg.observable, n, j_max, samples,
                                cfg.seed, tau=tau, q=0 if q is None else q)
    lines = ["j,estimate,stderr"]
    for (j, est), se in zip(rep.per_j_estimates, rep.standard_errors):
        lines.append(f"{j},{est!r},{se!r}")
    text = "\n".join(lines) + "\n"
    if output:
        Path(output).write_text(text, encoding="utf-8")
    else:
        click.echo(text, nl=False)
    click.echo(json.dumps(
        {"probe": "short-returns", "n": rep.n, "q": rep.q,
         "weighted_total": rep.weighted_total, "threshold": rep.threshold,
         "exceed_prob": rep.exceed_prob, "event_prob": rep.event_prob,
         "samples": rep.samples},
        indent=2,
    ))


def _recipe_names():
    root = resources.files("hyperevt") / "recipes"
    return sorted(p.name[:-4] for p in root.iterdir() if p.name.endswith(".ini"))


def recipe_config(name: str):
    """Load a bundled recipe by name."""
    from .config import parse_config_text
    from .errors import ConfigError

    root = resources.files("hyperevt") / "recipes"
    path = root / f"{name}.ini"
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise ConfigError(
            f"unknown recipe {name!r}; available: {', '.join(_recipe_names())}"
        )
    return build_experiment(parse_config_text(text, label=name), label=name)


@main.command()
@click.argument("name", required=False)
@click.option("--outdir", "-o", type=click.Path(), default="results",
              show_default=True)
@click.option("--list", "list_recipes", is_flag=True)
@_handle_errors
def replicate(name, outdir, list_recipes):
    """Run a bundled experiment recipe by NAME (see --list)."""
    from .errors import ConfigError

    if list_recipes or not name:
        for n in _recipe_names():
            click.echo(n)
        return
    cfg = recipe_config(name)
    out = Path(outdir) / name
    out.mkdir(parents=True, exist_ok=True)

    if cfg.evl_tau_grid:
        from .theory import predict_for

        points = run_evl(cfg)
        pred = predict_for(cfg.system, cfg.observable, q_max=cfg.q_max,
                           alignment_tol=cfg.alignment_tol)
        theta_ref = 1.0 if pred is None else pred.value
        (out / "evl.csv").write_text(evl_to_csv(points, theta_ref), encoding="utf-8")
        summary = {
            "recipe": name,
            "points": [
                {"tau": p.tau, "p_empirical": p.p_empirical, "std_error": p.std_error}
                for p in points
            ],
        }
    elif cfg.sweep_key:
        results = run_sweep(cfg)
        (out / "results.csv").write_text(
            sweep_to_csv(results, cfg.sweep_key), encoding="utf-8"
        )
        summary = {
            "recipe": name,
            "sweep": cfg.sweep_key,
            "results": [
                {cfg.sweep_key: v, **result_to_summary(r)} for v, r in results
            ],
        }
    else:
        result = run_experiment(cfg)
        (out / "results.csv").write_text(result_to_csv(result), encoding="utf-8")
        summary = result_to_summary(result)
        summary["recipe"] = name
    (out / "summary.json").write_text(json.dumps(summary, indent=2), encoding="utf-8")
    click.echo(json.dumps(summary, indent=2))


if __name__ == "__main__":  # pragma: no cover
    main()
