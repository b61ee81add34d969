"""Configuration-driven experiment harness.

Verbs: ``table`` (precompute a kinetic table), ``simulate`` (trajectories,
histograms, target diagnostics), ``field`` (conformal phase-space fields),
``optimize`` (tiny-MLP training runs), ``compare`` (two artifact dirs), and
``validate-sampler`` (KS check of the noise generator against its own
integrated density).

Every run resolves its settings (file config overridden by CLI flags,
remaining fields from documented defaults), echoes the resolved config to
``config.json`` in the output directory before running, and writes
deterministic CSV artifacts: identical spec + seed gives byte-identical files.

Exit codes: 0 success, 2 config error, 3 unexpected divergence,
4 numerical-validation failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import dynamics, kinetic, measure, optim, potentials, stable

__all__ = ["main", "ConfigError", "run_simulate", "run_field", "run_optimize", "run_compare"]

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DIVERGENCE = 3
EXIT_VALIDATION = 4


class ConfigError(ValueError):
    """Invalid experiment configuration; names the offending field."""

    def __init__(self, field: str, message: str):
        super().__init__(f"config field {field!r}: {message}")
        self.field = field


def _run_id(spec: dict) -> str:
    blob = json.dumps(spec, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:12]


def _echo_config(outdir: Path, spec: dict) -> Path:
    outdir.mkdir(parents=True, exist_ok=True)
    path = outdir / "config.json"
    path.write_text(json.dumps(spec, sort_keys=True, indent=2) + "\n")
    return path


def _write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(v) if isinstance(v, float) else v for v in row])


def _schedule_from(spec: dict) -> dynamics.StepSchedule:
    return dynamics.StepSchedule(
        kind=spec["schedule"], eta0=spec["eta0"], decay=spec["decay"]
    )


def _table_from(spec: dict) -> kinetic.KineticTable:
    cache = spec.get("cache_dir")
    return kinetic.build_table(
        spec["alpha"], spec["table_v_max"], spec["table_n_points"],
        cache_dir=cache,
    )


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------

SIMULATE_DEFAULTS = {
    "dynamics": "fuld",
    "potential": "quartic-well",
    "alpha": 1.0,
    "beta": 1.0,
    "gamma": 10.0,
    "schedule": "constant",
    "eta0": 0.01,
    "decay": 0.0,
    "iterations": 50000,
    "seed": 0,
    "chains": 1,
    "x0": 0.0,
    "v0": 0.0,
    "bins": 201,
    "range_lo": -3.0,
    "range_hi": 3.0,
    "table_v_max": 100.0,
    "table_n_points": 200001,
    "cache_dir": None,
    "expect_divergence": False,
    "save_trajectory": False,
    "stride": 1,
}


def _validate_simulate(spec: dict) -> None:
    if spec["dynamics"] not in ("fuld", "ud", "overdamped"):
        raise ConfigError("dynamics", f"unknown dynamics {spec['dynamics']!r}")
    if spec["potential"] not in potentials.registered_names():
        raise ConfigError("potential", f"unknown potential {spec['potential']!r}")
    if not 0.0 < spec["alpha"] <= 2.0:
        raise ConfigError("alpha", "must lie in (0, 2]")
    if spec["dynamics"] == "overdamped" and spec["alpha"] <= 1.0:
        raise ConfigError("alpha", "overdamped dynamics requires alpha > 1")
    if spec["beta"] <= 0.0:
        raise ConfigError("beta", "must be positive")
    if spec["gamma"] <= 0.0:
        raise ConfigError("gamma", "must be positive")
    if spec["eta0"] * spec["gamma"] >= 1.0 and spec["dynamics"] != "overdamped":
        raise ConfigError("eta0", "eta0 * gamma must stay below 1")
    if spec["iterations"] < 0:
        raise ConfigError("iterations", "must be >= 0")
    if spec["chains"] < 1:
        raise ConfigError("chains", "must be >= 1")
    if spec["range_hi"] <= spec["range_lo"]:
        raise ConfigError("range_hi", "must exceed range_lo")
    if spec["bins"] < 2:
        raise ConfigError("bins", "must be >= 2")


def run_simulate(spec: dict, outdir: Path) -> dict:
    spec = {**SIMULATE_DEFAULTS, **spec}
    _validate_simulate(spec)
    created: list[Path] = []
    created.append(_echo_config(outdir, spec))
    try:
        pot = potentials.get_potential(spec["potential"], 1)
        schedule = _schedule_from(spec)
        table = _table_from(spec) if spec["dynamics"] == "fuld" else None
        cfg = dynamics.SimConfig(
            potential=pot,
            alpha=spec["alpha"],
            gamma=spec["gamma"],
            beta=spec["beta"],
            schedule=schedule,
            iterations=spec["iterations"],
            seed=spec["seed"],
            kinetic=table,
            x0=np.array([spec["x0"]]),
            v0=np.array([spec["v0"]]),
        )
        if spec["chains"] == 1:
            xs, vs, summary = dynamics.run_trajectory(cfg, dynamics=spec["dynamics"])
            trajectories = [xs[:, 0]]
            summaries = [summary]
            if spec["save_trajectory"]:
                tpath = outdir / "trajectory.csv"
                sl = slice(None, None, spec["stride"])
                dynamics.write_trajectory_csv(tpath, 0, xs[sl], vs[sl])
                created.append(tpath)
        else:
            trajectories, summaries = dynamics.run_ensemble(
                cfg, spec["chains"], dynamics=spec["dynamics"]
            )
        edges = np.linspace(spec["range_lo"], spec["range_hi"], spec["bins"] + 1)
        pooled = measure.EmpiricalMeasure(edges, np.zeros(spec["bins"]), 0.0, 0.0)
        for traj in trajectories:
            if traj.size == 0:
                continue
            part = measure.histogram(traj, edges, schedule, warn_overflow=1.01)
            pooled.weights = pooled.weights + part.weights
            pooled.under_weight += part.under_weight
            pooled.over_weight += part.over_weight
        target = measure.GibbsTarget(pot, spec["beta"])
        target_bins = target.bin_probabilities(edges)
        tv = measure.tv_distance(pooled, target)
        mode_list = measure.modes(pooled)
        max_abs_x = max(
            (float(np.max(np.abs(t))) for t in trajectories if t.size), default=0.0
        )
        diverged = any(s.diverged for s in summaries)
        run_id = _run_id(spec)
        hpath = outdir / "histogram.csv"
        _write_csv(
            hpath,
            ["bin_center", "empirical_weight", "target_weight"],
            zip(
                (float(c) for c in pooled.centers),
                (float(w) for w in pooled.normalized()),
                (float(q) for q in target_bins),
            ),
        )
        created.append(hpath)
        mpath = outdir / "metrics.csv"
        _write_csv(
            mpath,
            [
                "run_id", "tv", "modes", "max_abs_x", "s_k",
                "diverged", "diverged_chains", "overflow_fraction",
            ],
            [[
                run_id,
                float(tv),
                ";".join(repr(m) for m in mode_list),
                float(max_abs_x),
                float(pooled.total_weight),
                int(diverged),
                int(sum(s.diverged for s in summaries)),
                float(pooled.overflow_fraction),
            ]],
        )
        created.append(mpath)
        return {
            "run_id": run_id,
            "tv": tv,
            "modes": mode_list,
            "max_abs_x": max_abs_x,
            "diverged": diverged,
            "spec": spec,
        }
    except Exception:
        for p in created:
            p.unlink(missing_ok=True)
        raise


# ---------------------------------------------------------------------------
# field
# ---------------------------------------------------------------------------

FIELD_DEFAULTS = {
    "potential": "pure-quartic",
    "kinetic": "gaussian",
    "alpha": 1.7,
    "gamma": 1.0,
    "x_lo": -2.0,
    "x_hi": 2.0,
    "v_lo": -2.0,
    "v_hi": 2.0,
    "nodes": 21,
    "table_v_max": 100.0,
    "table_n_points": 200001,
    "cache_dir": None,
}


def run_field(spec: dict, outdir: Path) -> dict:
    spec = {**FIELD_DEFAULTS, **spec}
    if spec["potential"] not in potentials.registered_names():
        raise ConfigError("potential", f"unknown potential {spec['potential']!r}")
    if spec["kinetic"] not in ("gaussian", "stable"):
        raise ConfigError("kinetic", "must be 'gaussian' or 'stable'")
    if not 0.0 < spec["alpha"] <= 2.0:
        raise ConfigError("alpha", "must lie in (0, 2]")
    created = [_echo_config(outdir, spec)]
    try:
        pot = potentials.get_potential(spec["potential"], 1)
        ke = "gaussian" if spec["kinetic"] == "gaussian" else _table_from(spec)
        field = dynamics.conformal_field(
            pot,
            ke,
            spec["gamma"],
            spec["alpha"],
            np.linspace(spec["x_lo"], spec["x_hi"], spec["nodes"]),
            np.linspace(spec["v_lo"], spec["v_hi"], spec["nodes"]),
        )
        fpath = outdir / "field.csv"
        rows = []
        for idx in np.ndindex(field.x.shape):
            rows.append([
                float(field.x[idx]), float(field.v[idx]),
                float(field.ham_dx[idx]), float(field.ham_dv[idx]),
                float(field.dis_dx[idx]), float(field.dis_dv[idx]),
                float(field.total_dx[idx]), float(field.total_dv[idx]),
                int(field.overflow[idx]),
            ])
        _write_csv(
            fpath,
            ["x", "v", "ham_dx", "ham_dv", "dis_dx", "dis_dv", "total_dx", "total_dv", "overflow"],
            rows,
        )
        created.append(fpath)
        return {"overflow_nodes": int(field.overflow.sum()), "spec": spec}
    except Exception:
        for p in created:
            p.unlink(missing_ok=True)
        raise


# ---------------------------------------------------------------------------
# optimize
# ---------------------------------------------------------------------------

OPTIMIZE_DEFAULTS = {
    "alpha": 2.0,
    "eta0": 0.3,
    "schedule": "constant",
    "decay": 0.0,
    "gamma": 1.0,
    "epochs": 200,
    "batch_size": 32,
    "width": 16,
    "seed": 0,
    "data_seed": 5,
    "model_seed": 3,
    "n_train": 500,
    "n_test": 200,
    "noise_alpha": None,
    "noise_scale": 1.0,
    "table_v_max": 100.0,
    "table_n_points": 200001,
    "cache_dir": None,
}


def run_optimize(spec: dict, outdir: Path) -> dict:
    spec = {**OPTIMIZE_DEFAULTS, **spec}
    if not 0.0 < spec["alpha"] <= 2.0:
        raise ConfigError("alpha", "must lie in (0, 2]")
    if spec["eta0"] * spec["gamma"] > 1.0:
        raise ConfigError("eta0", "eta0 * gamma must not exceed 1")
    if spec["epochs"] < 0:
        raise ConfigError("epochs", "must be >= 0")
    created = [_echo_config(outdir, spec)]
    try:
        table = _table_from(spec)
        model = optim.TinyMlp(width=spec["width"], seed=spec["model_seed"])
        train_set, test_set = optim.make_two_clusters(
            spec["n_train"], spec["n_test"], seed=spec["data_seed"]
        )
        noise = None
        if spec["noise_alpha"] is not None:
            noise = optim.NoiseInjector(
                stable.AlphaStable(spec["noise_alpha"], 1.0), spec["noise_scale"]
            )
        result = optim.train(
            model,
            train_set,
            test_set,
            table,
            _schedule_from(spec),
            gamma=spec["gamma"],
            epochs=spec["epochs"],
            batch_size=spec["batch_size"],
            seed=spec["seed"],
            noise=noise,
        )
        mpath = outdir / "metrics.csv"
        _write_csv(
            mpath,
            ["iteration", "train_loss", "train_acc", "test_loss", "test_acc"],
            (
                [h["iteration"], h["train_loss"], h["train_acc"], h["test_loss"], h["test_acc"]]
                for h in result.history
            ),
        )
        created.append(mpath)
        return {
            "diverged": result.diverged,
            "diverged_at": result.diverged_at,
            "final": result.history[-1],
            "spec": spec,
        }
    except Exception:
        for p in created:
            p.unlink(missing_ok=True)
        raise


# ---------------------------------------------------------------------------
# compare
# ---------------------------------------------------------------------------

def _read_csv(path: Path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def run_compare(dir_a: Path, dir_b: Path, out: Path | None = None) -> dict:
    """Side-by-side diagnostics of two simulate artifact directories."""
    rows = {}
    for tag, d in (("a", dir_a), ("b", dir_b)):
        hpath, mpath = Path(d) / "histogram.csv", Path(d) / "metrics.csv"
        if not hpath.exists() or not mpath.exists():
            raise ConfigError("run_dir", f"{d} is missing simulate artifacts")
        rows[tag] = {"hist": _read_csv(hpath), "metrics": _read_csv(mpath)[0]}
    centers_a = [r["bin_center"] for r in rows["a"]["hist"]]
    centers_b = [r["bin_center"] for r in rows["b"]["hist"]]
    if centers_a != centers_b:
        raise ConfigError("bins", "runs used different binning; rerun with matching bins")
    report = {}
    for tag in ("a", "b"):
        m = rows[tag]["metrics"]
        report[f"tv_{tag}"] = float(m["tv"])
        report[f"modes_{tag}"] = m["modes"]
        report[f"max_abs_x_{tag}"] = float(m["max_abs_x"])
        report[f"diverged_{tag}"] = int(m["diverged"])
    report["tv_delta"] = report["tv_b"] - report["tv_a"]
    report["max_abs_x_ratio"] = (
        report["max_abs_x_b"] / report["max_abs_x_a"]
        if report["max_abs_x_a"] > 0
        else float("inf")
    )
    if out is not None:
        _write_csv(
            Path(out),
            list(report.keys()),
            [[report[k] for k in report]],
        )
    return report


# ---------------------------------------------------------------------------
# validate-sampler
# ---------------------------------------------------------------------------

def run_validate_sampler(alpha: float, sigma: float, n: int, seed: int, threshold: float) -> dict:
    dist = stable.AlphaStable(alpha, sigma)
    rng = np.random.default_rng(seed)
    samples = stable.sample(dist, n, rng)
    cdf = stable.numeric_cdf(dist)
    ks = measure.ks_statistic(samples, cdf)
    return {"alpha": alpha, "sigma": sigma, "n": n, "ks": ks, "passed": ks < threshold}


# ---------------------------------------------------------------------------
# argument plumbing
# ---------------------------------------------------------------------------

def _add_spec_args(p: argparse.ArgumentParser, defaults: dict) -> None:
    p.add_argument("--config", type=Path, help="JSON config file (flags override it)")
    for key, default in defaults.items():
        flag = "--" + key.replace("_", "-")
        if isinstance(default, bool):
            p.add_argument(flag, action="store_true", default=None)
        elif key in ("cache_dir",):
            p.add_argument(flag, type=str, default=None)
        elif isinstance(default, int) and not isinstance(default, bool):
            p.add_argument(flag, type=int, default=None)
        elif isinstance(default, float):
            p.add_argument(flag, type=float, default=None)
        elif default is None:
            p.add_argument(flag, type=float, default=None)
        else:
            p.add_argument(flag, type=str, default=None)


def _resolve_spec(args: argparse.Namespace, defaults: dict) -> dict:
    spec = dict(defaults)
    if args.config is not None:
        loaded = json.loads(Path(args.config).read_text())
        unknown = set(loaded) - set(defaults)
        if unknown:
            raise ConfigError(sorted(unknown)[0], "unknown config field")
        spec.update(loaded)
    for key in defaults:
        val = getattr(args, key, None)
        if val is not None:
            spec[key] = val
    return spec


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fuld", description=__doc__)
    sub = parser.add_subparsers(dest="verb", required=True)

    p_table = sub.add_parser("table", help="precompute and cache a kinetic table")
    p_table.add_argument("--alpha", type=float, required=True)
    p_table.add_argument("--v-max", type=float, default=100.0)
    p_table.add_argument("--n-points", type=int, default=200001)
    p_table.add_argument("--cache-dir", type=str, default="tables")
    p_table.add_argument("--csv", type=Path, help="also export an inspection CSV")

    p_sim = sub.add_parser("simulate", help="run trajectories and histogram diagnostics")
    _add_spec_args(p_sim, SIMULATE_DEFAULTS)
    p_sim.add_argument("--out-dir", type=Path, required=True)

    p_field = sub.add_parser("field", help="export a conformal phase-space field")
    _add_spec_args(p_field, FIELD_DEFAULTS)
    p_field.add_argument("--out-dir", type=Path, required=True)

    p_opt = sub.add_parser("optimize", help="train the desk-scale classifier")
    _add_spec_args(p_opt, OPTIMIZE_DEFAULTS)
    p_opt.add_argument("--out-dir", type=Path, required=True)

    p_cmp = sub.add_parser("compare", help="compare two simulate artifact dirs")
    p_cmp.add_argument("run_a", type=Path)
    p_cmp.add_argument("run_b", type=Path)
    p_cmp.add_argument("--out", type=Path, help="write the report CSV here")

    p_val = sub.add_parser("validate-sampler", help="KS-check the noise generator")
    p_val.add_argument("--alpha", type=float, required=True)
    p_val.add_argument("--sigma", type=float, default=1.0)
    p_val.add_argument("--n", type=int, default=100000)
    p_val.add_argument("--seed", type=int, default=0)
    p_val.add_argument("--threshold", type=float, default=0.01)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.verb == "table":
            table = kinetic.build_table(
                args.alpha, args.v_max, args.n_points, cache_dir=args.cache_dir
            )
            path = kinetic.cache_path(args.alpha, args.v_max, args.n_points, args.cache_dir)
            print(f"table cached at {path} (lipschitz bound {table.lipschitz:.6g})")
            if args.csv:
                kinetic.export_csv(table, args.csv)
                print(f"csv exported to {args.csv}")
            return EXIT_OK
        if args.verb == "simulate":
            spec = _resolve_spec(args, SIMULATE_DEFAULTS)
            result = run_simulate(spec, args.out_dir)
            print(
                f"run {result['run_id']}: tv={result['tv']:.4f} "
                f"modes={result['modes']} max|x|={result['max_abs_x']:.4g} "
                f"diverged={result['diverged']}"
            )
            if result["diverged"] and not spec["expect_divergence"]:
                print("unexpected divergence", file=sys.stderr)
                return EXIT_DIVERGENCE
            return EXIT_OK
        if args.verb == "field":
            spec = _resolve_spec(args, FIELD_DEFAULTS)
            result = run_field(spec, args.out_dir)
            print(f"field written ({result['overflow_nodes']} overflow nodes)")
            return EXIT_OK
        if args.verb == "optimize":
            spec = _resolve_spec(args, OPTIMIZE_DEFAULTS)
            result = run_optimize(spec, args.out_dir)
            final = result["final"]
            print(
                f"final: train_acc={final['train_acc']:.4f} "
                f"test_acc={final['test_acc']:.4f} diverged={result['diverged']}"
            )
            if result["diverged"] and result["spec"]["alpha"] < 2.0:
                print("unexpected divergence for alpha < 2", file=sys.stderr)
                return EXIT_DIVERGENCE
            return EXIT_OK
        if args.verb == "compare":
            report = run_compare(args.run_a, args.run_b, args.out)
            for key, val in report.items():
                print(f"{key}: {val}")
            return EXIT_OK
        if args.verb == "validate-sampler":
            result = run_validate_sampler(
                args.alpha, args.sigma, args.n, args.seed, args.threshold
            )
            print(f"alpha={result['alpha']} ks={result['ks']:.5f} passed={result['passed']}")
            return EXIT_OK if result["passed"] else EXIT_VALIDATION
        parser.error(f"unknown verb {args.verb}")
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except (ValueError, OSError) as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
