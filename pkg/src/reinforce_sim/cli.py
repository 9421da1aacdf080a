"""Batch command-line front-end.

Every subcommand is a pure function of its configuration and seed:
rerunning with the same arguments reproduces output files byte for
byte.  CSV outputs start with ``#``-prefixed metadata lines embedding
the tool version, the resolved configuration, and the seed; JSON
outputs carry the same information in a ``meta`` object.

Exit codes: 0 success, 1 invariant falsified at runtime, 2 usage error.
"""
from __future__ import annotations

import io
import json
import sys

import click
from scipy import stats

from . import __version__
from .direct import ModelParams, meeting_statistics, run_direct
from .distributions import BetaParams, RngStream, digamma, integrate_log_odds
from .rwre import criterion, difference_recurrence
from .urn import PolyaUrn, polya_fraction_samples, polya_limit_law, three_color_fraction_samples
from .urn import MagicUrn
from .urn_process import MAX_ENUM_HORIZON, SmallAPolicyError, enumerate_exact, tv_distance
from .coupling import marginal_check, run_coupling

TV_TOLERANCE = 1e-12


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    with open(path, "r", encoding="utf-8") as fh:
        cfg = json.load(fh)
    if not isinstance(cfg, dict):
        raise click.UsageError("config file must contain a JSON object")
    return cfg


def _resolve(flag, config: dict, key: str, default):
    """Flags override the config file, which overrides built-in defaults."""
    if flag is not None:
        return flag
    if key in config:
        return config[key]
    return default


def _meta(config: dict) -> dict:
    return {"tool": "reinforce-sim", "version": __version__, "config": config}


def _csv_header_lines(config: dict) -> list[str]:
    return [
        f"# reinforce-sim v{__version__}",
        f"# config: {json.dumps(config, sort_keys=True)}",
    ]


def _write_text(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _model_params(a, delta, l0, r0, events, seed, allow_small_a=False) -> ModelParams:
    if delta is not None and delta < 0:
        raise click.UsageError(f"delta must be nonnegative (got {delta})")
    try:
        return ModelParams(
            a=a, delta=delta, l0=l0, r0=r0, max_events=events, seed=seed,
            allow_small_a=allow_small_a,
        )
    except ValueError as exc:
        raise click.UsageError(str(exc)) from exc


@click.group()
@click.version_option(version=__version__, prog_name="reinforce-sim")
def main() -> None:
    """Reinforced-walk simulation and verification experiments."""


_seed_option = click.option(
    "--seed", type=int, default=None, envvar="REINFORCE_SIM_SEED",
    help="Master seed (env REINFORCE_SIM_SEED is the fallback; default 0).",
)
_config_option = click.option(
    "--config", "config_path", type=click.Path(exists=True, dir_okay=False),
    default=None, help="JSON config file; explicit flags override it.",
)


@main.command()
@_config_option
@click.option("--n", "n_particles", type=int, default=None, help="Number of particles (default 2).")
@click.option("--a", type=float, default=None, help="Initial edge weight (default 1.0).")
@click.option("--delta", type=float, default=None, help="Rightward drift (default 0.0).")
@click.option("--l0", type=int, default=None)
@click.option("--r0", type=int, default=None)
@click.option("--events", type=int, default=None, help="Event budget per trial (default 10000).")
@click.option("--trials", type=int, default=None, help="Number of trials (default 100).")
@click.option("--stop-after-meetings", type=int, default=None,
              help="End each trial after this many meetings (hitting-time mode).")
@click.option("--timestamps", is_flag=True, help="Attach exponential holding times.")
@_seed_option
@click.option("--out", "out_path", type=click.Path(dir_okay=False), default=None,
              help="Meeting statistics CSV (default stdout).")
@click.option("--trajectory-out", type=click.Path(dir_okay=False), default=None,
              help="JSONL event log of the first trial.")
def simulate(config_path, n_particles, a, delta, l0, r0, events, trials,
             stop_after_meetings, timestamps, seed, out_path, trajectory_out) -> None:
    """Run the direct weight-reinforced dynamics and report meeting statistics."""
    cfg = _load_config(config_path)
    n_particles = _resolve(n_particles, cfg, "n", 2)
    a = _resolve(a, cfg, "a", 1.0)
    delta = _resolve(delta, cfg, "delta", 0.0)
    l0 = _resolve(l0, cfg, "l0", 0)
    r0 = _resolve(r0, cfg, "r0", 2)
    events = _resolve(events, cfg, "events", 10000)
    trials = _resolve(trials, cfg, "trials", 100)
    seed = _resolve(seed, cfg, "seed", 0)
    stop_after_meetings = _resolve(stop_after_meetings, cfg, "stop_after_meetings", None)
    if n_particles < 1:
        raise click.UsageError("--n must be at least 1")
    if trials < 1:
        raise click.UsageError("--trials must be at least 1")
    params = _model_params(a, delta, l0, r0, events, seed)

    records = []
    for trial in range(trials):
        rng = RngStream(seed, trial)
        records.append(
            run_direct(
                params, n_particles, rng,
                record_events=(trial == 0 and trajectory_out is not None),
                timestamps=timestamps,
                stop_after_meetings=stop_after_meetings,
            )
        )
    resolved = {
        "n": n_particles, "a": a, "delta": delta, "l0": l0, "r0": r0,
        "events": events, "trials": trials, "seed": seed,
        "outside_recurrence_regime": params.outside_recurrence_regime,
    }
    buf = io.StringIO()
    for line in _csv_header_lines(resolved):
        buf.write(line + "\r\n")
    if params.outside_recurrence_regime:
        buf.write("# note: delta >= 1 is outside the proven recurrence regime\r\n")
    buf.write("k,frequency,stderr\r\n")
    if n_particles > 1:
        for row in meeting_statistics(records).rows():
            buf.write(f"{row['k']},{row['frequency']!r},{row['stderr']!r}\r\n")
    _write_text(out_path, buf.getvalue())
    if trajectory_out is not None:
        _write_text(trajectory_out, records[0].to_jsonl())


@main.command("urn-verify")
@_config_option
@click.option("--a", type=float, default=None)
@click.option("--delta", type=float, default=None)
@click.option("--l0", type=int, default=None)
@click.option("--r0", type=int, default=None)
@click.option("--horizon", type=int, default=None, help="Enumeration depth (default 4).")
@click.option("--allow-small-a", is_flag=True, help="Permit 0 < a < 1 for the urn model.")
@click.option("--out", "out_path", type=click.Path(dir_okay=False), default=None,
              help="JSON report path (default stdout summary only).")
def urn_verify(config_path, a, delta, l0, r0, horizon, allow_small_a, out_path) -> None:
    """Certify the urn representation against the weight dynamics by exact
    enumeration; fails (exit 1) if the distributions differ."""
    cfg = _load_config(config_path)
    a = _resolve(a, cfg, "a", 1.0)
    delta = _resolve(delta, cfg, "delta", 0.0)
    l0 = _resolve(l0, cfg, "l0", 0)
    r0 = _resolve(r0, cfg, "r0", 2)
    horizon = _resolve(horizon, cfg, "horizon", 4)
    if horizon < 0 or horizon > MAX_ENUM_HORIZON:
        raise click.UsageError(
            f"horizon {horizon} outside [0, {MAX_ENUM_HORIZON}] "
            f"(full expansion would have ~{4 ** max(horizon, 0)} leaves)"
        )
    params = _model_params(a, delta, l0, r0, 0, 0, allow_small_a=allow_small_a)
    try:
        d_direct = enumerate_exact("direct", params, horizon)
        d_urn = enumerate_exact("urn", params, horizon)
    except SmallAPolicyError as exc:
        raise click.UsageError(str(exc)) from exc
    tv = tv_distance(d_direct, d_urn)
    ok = tv < TV_TOLERANCE
    report = {
        "meta": _meta({"a": a, "delta": delta, "l0": l0, "r0": r0, "horizon": horizon}),
        "tv_distance": tv,
        "tolerance": TV_TOLERANCE,
        "trajectories_direct": len(d_direct.probs),
        "trajectories_urn": len(d_urn.probs),
        "equivalent": ok,
    }
    if out_path is not None:
        _write_text(out_path, json.dumps(report, sort_keys=True) + "\n")
    click.echo(f"TV(direct, urn) = {tv!r} at horizon {horizon}: {'OK' if ok else 'MISMATCH'}")
    if not ok:
        sys.exit(1)


@main.command()
@_config_option
@click.option("--a", type=float, default=None)
@click.option("--delta", type=float, default=None)
@click.option("--l0", type=int, default=None)
@click.option("--r0", type=int, default=None)
@click.option("--events", type=int, default=None, help="Event budget per run (default 10000).")
@click.option("--trials", type=int, default=None, help="Number of coupled runs (default 100).")
@click.option("--allow-small-a", is_flag=True)
@click.option("--marginal-check", "do_marginal_check", is_flag=True,
              help="Append a fixed-environment jump-frequency test report.")
@_seed_option
@click.option("--out", "out_path", type=click.Path(dir_okay=False), default=None,
              help="JSONL run summaries (default stdout).")
def couple(config_path, a, delta, l0, r0, events, trials, allow_small_a,
           do_marginal_check, seed, out_path) -> None:
    """Run the four-process coupled construction; any ordering violation
    is a hard failure (exit 1)."""
    cfg = _load_config(config_path)
    a = _resolve(a, cfg, "a", 1.0)
    delta = _resolve(delta, cfg, "delta", 0.0)
    l0 = _resolve(l0, cfg, "l0", 0)
    r0 = _resolve(r0, cfg, "r0", 2)
    events = _resolve(events, cfg, "events", 10000)
    trials = _resolve(trials, cfg, "trials", 100)
    seed = _resolve(seed, cfg, "seed", 0)
    if trials < 1:
        raise click.UsageError("--trials must be at least 1")
    params = _model_params(a, delta, l0, r0, events, seed, allow_small_a=allow_small_a)
    try:
        results = [
            run_coupling(params, events, RngStream(seed, trial))
            for trial in range(trials)
        ]
    except SmallAPolicyError as exc:
        raise click.UsageError(str(exc)) from exc
    resolved = {
        "a": a, "delta": delta, "l0": l0, "r0": r0,
        "events": events, "trials": trials, "seed": seed,
    }
    lines = [json.dumps({"meta": _meta(resolved)}, sort_keys=True)]
    lines += [res.to_json() for res in results]
    if do_marginal_check:
        report = marginal_check(
            params, trials=min(trials, 200), max_events=events,
            rng=RngStream(seed, 10_000_000), env_rng=RngStream(seed, 20_000_000),
        )
        lines.append(report.to_json())
    _write_text(out_path, "\n".join(lines) + "\n")
    violations = sum(res.violations for res in results)
    if violations:
        click.echo(f"ordering violations detected in {violations} run(s)", err=True)
        sys.exit(1)


@main.command("criterion")
@_config_option
@click.option("--pair", "pairs", type=(float, float), multiple=True,
              help="Beta shape pair alpha beta; repeatable.")
@click.option("--out", "out_path", type=click.Path(dir_okay=False), default=None)
def criterion_cmd(config_path, pairs, out_path) -> None:
    """Evaluate transience / return-time criteria over a parameter grid,
    with both the closed form and the quadrature route."""
    cfg = _load_config(config_path)
    grid = list(pairs) or [tuple(p) for p in cfg.get("pairs", [])]
    if not grid:
        raise click.UsageError("give at least one --pair ALPHA BETA (or pairs in --config)")
    rows = []
    for alpha, beta in grid:
        try:
            p = BetaParams(alpha, beta)
        except ValueError as exc:
            raise click.UsageError(str(exc)) from exc
        res = criterion(p)
        row = res.to_dict()
        row["closed_form"] = digamma(alpha) - digamma(beta)
        row["quadrature"] = integrate_log_odds(p)
        rows.append(row)
    report = {"meta": _meta({"pairs": [list(g) for g in grid]}), "results": rows}
    _write_text(out_path, json.dumps(report, sort_keys=True) + "\n")


@main.command()
@_config_option
@click.option("--red", type=float, default=None, help="Initial red mass (default 1.0).")
@click.option("--blue", type=float, default=None, help="Initial blue mass (default 1.0).")
@click.option("--d", "d_", type=float, default=None, help="Reinforcement per draw (default 1.0).")
@click.option("--draws", type=int, default=None, help="Drawings per run (default 10000).")
@click.option("--runs", type=int, default=None, help="Monte Carlo runs (default 10000).")
@click.option("--three-color", is_flag=True,
              help="Also test the (pure red, family, pure blue) marginals.")
@click.option("--ks-threshold", type=float, default=None, help="Default 0.02.")
@_seed_option
@click.option("--out", "out_path", type=click.Path(dir_okay=False), default=None)
def polya(config_path, red, blue, d_, draws, runs, three_color, ks_threshold,
          seed, out_path) -> None:
    """Monte Carlo check of the urn limit laws (KS against the Beta or
    Dirichlet-marginal targets); exit 1 if a KS distance exceeds the threshold."""
    cfg = _load_config(config_path)
    red = _resolve(red, cfg, "red", 1.0)
    blue = _resolve(blue, cfg, "blue", 1.0)
    d_ = _resolve(d_, cfg, "d", 1.0)
    draws = _resolve(draws, cfg, "draws", 10000)
    runs = _resolve(runs, cfg, "runs", 10000)
    threshold = _resolve(ks_threshold, cfg, "ks_threshold", 0.02)
    seed = _resolve(seed, cfg, "seed", 0)
    try:
        urn = PolyaUrn(red, blue, d_)
    except ValueError as exc:
        raise click.UsageError(str(exc)) from exc
    rng = RngStream(seed, 0)
    samples = polya_fraction_samples(urn, draws, runs, rng)
    law = polya_limit_law(urn)
    ks = float(stats.kstest(samples, lambda x: stats.beta.cdf(x, law.alpha, law.beta)).statistic)
    resolved = {"red": red, "blue": blue, "d": d_, "draws": draws, "runs": runs,
                "seed": seed, "ks_threshold": threshold, "three_color": three_color}
    report = {
        "meta": _meta(resolved),
        "two_color": {
            "target": {"alpha": law.alpha, "beta": law.beta},
            "ks_distance": ks,
            "passed": ks < threshold,
        },
    }
    failed = ks >= threshold
    if three_color:
        fracs = three_color_fraction_samples(MagicUrn(red, blue), draws, runs,
                                             RngStream(seed, 1))
        marginals = []
        alphas = [red / 2.0, 0.5, blue / 2.0]
        total = sum(alphas)
        for i, name in enumerate(("pure_red", "family", "pure_blue")):
            a1, a2 = alphas[i], total - alphas[i]
            ks_i = float(stats.kstest(fracs[:, i], lambda x: stats.beta.cdf(x, a1, a2)).statistic)
            marginals.append({"component": name, "alpha": a1, "beta": a2,
                              "ks_distance": ks_i, "passed": ks_i < threshold})
            failed = failed or ks_i >= threshold
        report["three_color"] = marginals
    _write_text(out_path, json.dumps(report, sort_keys=True) + "\n")
    if failed:
        sys.exit(1)


@main.command()
@_config_option
@click.option("--alpha1", type=float, default=None)
@click.option("--beta1", type=float, default=None)
@click.option("--alpha2", type=float, default=None)
@click.option("--beta2", type=float, default=None)
@click.option("--budgets", type=str, default=None,
              help="Comma-separated event budgets (default 100,1000,10000).")
@click.option("--trials", type=int, default=None, help="Default 1000.")
@_seed_option
@click.option("--out", "out_path", type=click.Path(dir_okay=False), default=None,
              help="Curve CSV (default stdout).")
def rwre(config_path, alpha1, beta1, alpha2, beta2, budgets, trials, seed, out_path) -> None:
    """Two-chain difference-recurrence experiment: return-probability curve
    over increasing event budgets."""
    cfg = _load_config(config_path)
    alpha1 = _resolve(alpha1, cfg, "alpha1", 0.5)
    beta1 = _resolve(beta1, cfg, "beta1", 1.5)
    alpha2 = _resolve(alpha2, cfg, "alpha2", 0.5)
    beta2 = _resolve(beta2, cfg, "beta2", 1.5)
    budgets = _resolve(budgets, cfg, "budgets", "100,1000,10000")
    trials = _resolve(trials, cfg, "trials", 1000)
    seed = _resolve(seed, cfg, "seed", 0)
    try:
        budget_list = [int(tok) for tok in str(budgets).split(",") if tok.strip()]
        p1 = BetaParams(alpha1, beta1)
        p2 = BetaParams(alpha2, beta2)
    except ValueError as exc:
        raise click.UsageError(str(exc)) from exc
    import warnings as _warnings

    with _warnings.catch_warnings(record=True) as caught:
        _warnings.simplefilter("always")
        curve = difference_recurrence(p1, p2, budget_list, trials, RngStream(seed, 0))
    for w in caught:
        click.echo(f"warning: {w.message}", err=True)
    resolved = {"alpha1": alpha1, "beta1": beta1, "alpha2": alpha2, "beta2": beta2,
                "budgets": budget_list, "trials": trials, "seed": seed,
                "regime_ok": curve.regime_ok}
    buf = io.StringIO()
    for line in _csv_header_lines(resolved):
        buf.write(line + "\r\n")
    buf.write("budget,hit_fraction,stderr\r\n")
    for row in curve.rows():
        buf.write(f"{row['budget']},{row['hit_fraction']!r},{row['stderr']!r}\r\n")
    _write_text(out_path, buf.getvalue())


if __name__ == "__main__":
    main()
