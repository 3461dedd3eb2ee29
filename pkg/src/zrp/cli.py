"""Batch front-end: experiment configs in, deterministic artifacts out.

    zrp run --config experiment.json [--seed N] [--threads N] [--out DIR]
            [--format csv|json]
    zrp suite {acceptance,smoke} [--seed N] [--threads N] [--out DIR]

Exit codes: 0 pass, 1 config error, 2 diagnostic failure, 3 internal
invariant violation. Every output file is a pure function of
(config, seed, package version); wall-clock timing lives only in the
manifest, which is the one file excluded from byte-level reproducibility.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .configuration import (Configuration, config_from_json, config_to_json,
                            events_csv_string, replay, trajectory_summary)
from .diagnostics import (martingale_residual, mass_conservation_check,
                          poisson_flux_check, stationarity_statistical)
from .engine import OPEN, BoundaryPolicy, killed, periodic, simulate
from .errors import ConfigError, InvariantViolation, ZRPError
from .kernel import is_nearest_neighbour_1d, kernel_from_json
from .localfn import capped_occupancy
from .measures import fugacity_measure, sample_box_config
from .noise import HarrisNoise
from .parallel import TAG_SAMPLE, derived_rng, replica_map, resolve_threads
from .rates import check_corollary_conditions, rate_from_json
from .sites import site_from_coords

_DIAGNOSTICS = ("replay", "rate-growth", "stationarity", "flux", "mass",
                "martingale")


def _field(cfg: dict, name: str, kind=None, required: bool = True, default=None):
    if name not in cfg:
        if required:
            raise ConfigError(f"config field '{name}' is missing")
        return default
    v = cfg[name]
    if kind is not None and not isinstance(v, kind):
        raise ConfigError(f"config field '{name}' has the wrong type")
    return v


def _parse_policy(obj) -> BoundaryPolicy:
    kind = _field(obj, "kind", str)
    if kind == "open":
        return OPEN
    n = _field(obj, "n", int)
    if kind == "killed":
        return killed(n)
    if kind == "periodic":
        return periodic(n)
    raise ConfigError(f"config field 'policy.kind': unknown kind {kind!r}")


class Experiment:
    """Validated experiment description: everything a run needs."""

    def __init__(self, cfg: dict):
        self.raw = cfg
        self.kernel = kernel_from_json(_field(cfg, "kernel", dict))
        self.rate = rate_from_json(_field(cfg, "rate", dict))
        self.policy = _parse_policy(_field(cfg, "policy", dict))
        self.T = float(_field(cfg, "T", (int, float)))
        if not (self.T > 0):
            raise ConfigError("config field 'T' must be positive")
        self.replicas = int(_field(cfg, "replicas", int, required=False, default=1))
        if self.replicas < 1:
            raise ConfigError("config field 'replicas' must be >= 1")
        self.seed = _field(cfg, "seed", int, required=False, default=0)
        self.diagnostics = tuple(_field(cfg, "diagnostics", list,
                                        required=False, default=[]))
        for name in self.diagnostics:
            if name not in _DIAGNOSTICS:
                raise ConfigError(
                    f"config field 'diagnostics': unknown entry {name!r} "
                    f"(choose from {', '.join(_DIAGNOSTICS)})")
        init = _field(cfg, "initial", dict)
        self.init_mode = _field(init, "mode", str)
        if self.init_mode == "explicit":
            self.init_config = config_from_json(_field(init, "config", dict))
            if self.init_config.d != self.kernel.d:
                raise ConfigError("config field 'initial.config': dimension "
                                  "does not match the kernel")
        elif self.init_mode == "product":
            self.init_phi = float(_field(init, "phi", (int, float)))
            self.init_n = int(_field(init, "n", int))
            # fail early if the marginal cannot be certified
            fugacity_measure(self.rate, self.init_phi)
        elif self.init_mode == "point":
            self.init_nparticles = int(_field(init, "n_particles", int))
            site = _field(init, "site", list, required=False,
                          default=[0] * self.kernel.d)
            self.init_site = site_from_coords(site, self.kernel.d)
        else:
            raise ConfigError(
                f"config field 'initial.mode': unknown mode {self.init_mode!r}")

    def initial_for(self, r: int) -> Configuration:
        if self.init_mode == "explicit":
            return self.init_config
        if self.init_mode == "point":
            return Configuration(self.kernel.d,
                                 {self.init_site: self.init_nparticles})
        measure = fugacity_measure(self.rate, self.init_phi)
        rng = derived_rng(self.seed, TAG_SAMPLE, r)
        return sample_box_config(measure, self.init_n, self.kernel.d, rng)


def _run_worker(r, cfg_dict, seed):
    exp = Experiment(cfg_dict)
    exp.seed = seed
    eta0 = exp.initial_for(r)
    noise = HarrisNoise(seed, (r,))
    return simulate(eta0, exp.rate, exp.kernel, exp.policy, exp.T, noise)


def _events_json_string(traj) -> str:
    from .sites import site_coords
    evs = [{"t": t, "src": list(site_coords(s)), "dst": list(site_coords(d)),
            "kind": k, "marginal": m} for (t, s, d, k, m) in traj.events]
    return json.dumps({"events": evs}, sort_keys=True, indent=1) + "\n"


def _diagnostic_reports(exp: Experiment, trajectories, threads: int) -> list:
    reports = []
    for name in exp.diagnostics:
        if name == "replay":
            for traj in trajectories:
                replay(traj)  # raises InvariantViolation on any mismatch
            reports.append({"test": "replay", "pass": True,
                            "statistic": 0.0, "threshold": 0.0,
                            "n_replicas": len(trajectories)})
        elif name == "rate-growth":
            rep = check_corollary_conditions(exp.rate, exp.kernel)
            out = rep.to_json()
            out.update({"test": "rate-growth", "pass": True,
                        "advisory": True})
            reports.append(out)
        elif name == "stationarity":
            if exp.policy.kind != "periodic" or exp.init_mode != "product":
                raise ConfigError("diagnostic 'stationarity' needs a periodic "
                                  "policy and a product initial condition")
            rep = stationarity_statistical(
                exp.rate, exp.kernel, exp.init_phi, exp.policy.n, exp.T,
                exp.replicas, exp.seed, threads=threads)
            reports.append(rep.to_json())
        elif name == "flux":
            if (exp.policy.kind != "periodic" or exp.init_mode != "product"
                    or is_nearest_neighbour_1d(exp.kernel) != (1.0, 0.0)):
                raise ConfigError("diagnostic 'flux' needs a periodic policy, "
                                  "a product initial condition, and the "
                                  "totally asymmetric d=1 kernel")
            rep = poisson_flux_check(exp.rate, exp.init_phi, exp.policy.n,
                                     exp.T, exp.replicas, exp.seed,
                                     threads=threads)
            reports.append(rep.to_json())
        elif name == "mass":
            if exp.policy.kind != "periodic" or exp.init_mode != "product":
                raise ConfigError("diagnostic 'mass' needs a periodic policy "
                                  "and a product initial condition")
            rep = mass_conservation_check(exp.rate, exp.kernel, exp.init_phi,
                                          exp.policy.n, exp.T, exp.replicas,
                                          exp.seed, threads=threads)
            reports.append(rep.to_json())
        elif name == "martingale":
            f = capped_occupancy(0 if exp.kernel.d == 1 else (0,) * exp.kernel.d, 10)
            rep = martingale_residual(f, exp.initial_for(0), exp.rate,
                                      exp.kernel, exp.policy, exp.T,
                                      exp.replicas, exp.seed, threads=threads)
            reports.append(rep.to_json())
    return reports


def _cmd_run(args) -> int:
    path = Path(args.config)
    try:
        cfg = json.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except json.JSONDecodeError as e:
        raise ConfigError(f"config is not valid JSON: {e}")
    if args.seed is not None:
        cfg["seed"] = args.seed
    exp = Experiment(cfg)
    threads = resolve_threads(args.threads)
    out_dir = Path(args.out) if args.out else Path("zrp-out")
    out_dir.mkdir(parents=True, exist_ok=True)

    t0 = time.monotonic()
    trajectories = replica_map(_run_worker, exp.replicas, threads=threads,
                               args=(cfg, exp.seed))
    reports = _diagnostic_reports(exp, trajectories, threads)
    wall = time.monotonic() - t0

    for r, traj in enumerate(trajectories):
        if args.format == "json":
            (out_dir / f"events_r{r}.json").write_text(_events_json_string(traj))
        else:
            (out_dir / f"events_r{r}.csv").write_text(events_csv_string(traj))
    summary = [trajectory_summary(t) for t in trajectories]
    (out_dir / "summary.json").write_text(
        json.dumps(summary, sort_keys=True, indent=1) + "\n")
    for rep in reports:
        (out_dir / f"report_{rep['test']}.json").write_text(
            json.dumps(rep, sort_keys=True, indent=1) + "\n")

    canonical = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    manifest = {
        "config_sha256": hashlib.sha256(canonical.encode()).hexdigest(),
        "seed": exp.seed,
        "replicas": exp.replicas,
        "threads": threads,
        "version": __version__,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "python": sys.version.split()[0],
        "wall_time_s": wall,
    }
    (out_dir / "manifest.json").write_text(
        json.dumps(manifest, sort_keys=True, indent=1) + "\n")

    failed = [rep["test"] for rep in reports if not rep["pass"]]
    for rep in reports:
        status = "pass" if rep["pass"] else "FAIL"
        note = ("advisory" if rep.get("advisory")
                else f"statistic={rep.get('statistic', 0.0):.6g}")
        print(f"{rep['test']}: {status} ({note})")
    print(f"wrote {out_dir}/ ({exp.replicas} replicas, "
          f"{sum(t.event_count() for t in trajectories)} events)")
    return 2 if failed else 0


def _cmd_suite(args) -> int:
    from .acceptance import run_suite
    if args.which not in ("acceptance", "smoke"):
        raise ConfigError("no tests selected: choose 'acceptance' or 'smoke'")
    threads = resolve_threads(args.threads)
    results = run_suite(args.which, seed=args.seed, threads=threads)
    rows = []
    ok = True
    for res in results:
        status = "PASS" if res.passed else "FAIL"
        ok = ok and res.passed
        print(f"[{status}] {res.cid}: {res.name} "
              f"(statistic={res.statistic:.6g}, {res.seconds:.1f}s)")
        rows.append(res.to_json())
    payload = json.dumps({"suite": args.which, "results": rows,
                          "pass": ok}, sort_keys=True, indent=1) + "\n"
    if args.out:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / f"suite_{args.which}.json").write_text(payload)
    else:
        print(payload, end="")
    return 0 if ok else 2


class _Parser(argparse.ArgumentParser):
    # exit 2 is reserved for diagnostic failures, so usage errors take 1
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"config error: {message}", file=sys.stderr)
        raise SystemExit(1)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="zrp")
    sub = ap.add_subparsers(dest="cmd", required=True)

    run_p = sub.add_parser("run", help="run one experiment config")
    run_p.add_argument("--config", required=True)
    run_p.add_argument("--seed", type=int, default=None,
                       help="override the config seed")
    run_p.add_argument("--threads", type=int, default=None)
    run_p.add_argument("--out", default=None)
    run_p.add_argument("--format", choices=("csv", "json"), default="csv")
    run_p.set_defaults(func=_cmd_run)

    suite_p = sub.add_parser("suite", help="run the verification suite")
    suite_p.add_argument("which", choices=("acceptance", "smoke"))
    suite_p.add_argument("--seed", type=int, default=None)
    suite_p.add_argument("--threads", type=int, default=None)
    suite_p.add_argument("--out", default=None)
    suite_p.set_defaults(func=_cmd_suite)
    return ap


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 1
    except InvariantViolation as e:
        print(f"invariant violation: {e}", file=sys.stderr)
        return 3
    except ZRPError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
