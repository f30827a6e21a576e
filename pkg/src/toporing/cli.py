"""Command-line entry point wiring generation, analysis, and verification.

One binary, subcommand style. Every command resolves its full
configuration (flags > JSON config > defaults), writes outputs atomically
(temp file + rename), and drops a manifest.json next to them from which
`replay` reproduces the outputs bit-identically. Exit codes: 0 success,
2 bad arguments, 3 numeric abort during sampling.
"""

import argparse
import csv
import io
import json
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace

import numpy as np

from . import __version__
from .geometry import sample_gaussian, sample_torus, write_xyz, read_xyz, crown_polygon
from .persistence import rips_persistence, dominant_h1
from .size_control import SizeModel, closed_form_death, linear_size_estimate
from .guidance import GuidanceConfig
from .sampler import (
    DenoiseSchedule,
    geometric_schedule,
    SurrogateParams,
    surrogate_denoiser,
    denoise_with_guidance,
    connectivity_scaling_experiment,
    NonFiniteError,
)
from .baselines import NaiveConfig, naive_guided_sampling
from .analysis import build_graph, classify, batch_metrics

EXIT_OK = 0
EXIT_BAD_ARGS = 2
EXIT_NUMERIC = 3


class CLIError(Exception):
    pass


def _atomic_write(path, text: str):
    tmp = f"{path}.tmp.{os.getpid()}"
    with open(tmp, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _write_manifest(out_dir, command, resolved, seeds=None):
    manifest = {
        "command": command,
        "resolved": resolved,
        "seeds": seeds,
        "version": __version__,
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S"),
    }
    _atomic_write(os.path.join(out_dir, "manifest.json"), json.dumps(manifest, indent=2))
    return manifest


def _parse_seeds(text: str):
    if ".." in text:
        lo, hi = text.split("..")
        return list(range(int(lo), int(hi) + 1))
    return [int(s) for s in text.split(",") if s != ""]


def _parse_floats(text: str):
    return [float(s) for s in text.split(",") if s != ""]


def _parse_range(text: str):
    """'a:b:step' inclusive float grid, or a comma list."""
    if ":" in text:
        lo, hi, step = (float(x) for x in text.split(":"))
        count = int(round((hi - lo) / step)) + 1
        return [round(lo + i * step, 10) for i in range(count)]
    return _parse_floats(text)


def _parse_int_range(text: str):
    if ".." in text:
        lo, hi = text.split("..")
        return list(range(int(lo), int(hi) + 1))
    return [int(s) for s in text.split(",") if s != ""]


def _load_config(path):
    """Config file: guidance fields at top level, optional 'naive' and
    'surrogate' sections."""
    if path is None:
        return GuidanceConfig(), NaiveConfig(), SurrogateParams()
    with open(path) as fh:
        data = json.load(fh)
    naive = NaiveConfig.from_dict(data.pop("naive", {}))
    surr = data.pop("surrogate", {})
    known = {f.name for f in SurrogateParams.__dataclass_fields__.values()}
    unknown = set(surr) - known
    if unknown:
        raise CLIError(f"unknown surrogate config keys: {sorted(unknown)}")
    return GuidanceConfig.from_dict(data), naive, SurrogateParams(**surr)


def _csv_text(rows, header):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# generate
# ---------------------------------------------------------------------------


def _one_sample(args_tuple):
    (seed, n_atoms, steps, every_k, start_at, cfg_dict, naive_dict, surr_dict,
     baseline, sigma_init, trace) = args_tuple
    config = GuidanceConfig.from_dict(cfg_dict)
    params = SurrogateParams(**surr_dict)
    denoiser = surrogate_denoiser(params)
    schedule = geometric_schedule(T=steps, every_k=every_k, start_at=start_at)
    if baseline == "torus-init":
        init = sample_torus(n_atoms, rng_seed=seed)
    else:
        init = sample_gaussian(n_atoms, sigma_init, seed)
    if baseline == "naive":
        naive = NaiveConfig.from_dict(naive_dict)
        out = naive_guided_sampling(
            denoiser, schedule, init, naive,
            lambda_=config.lambda_, rng_seed=seed, trace=trace, trace_config=config,
        )
    else:
        out = denoise_with_guidance(
            denoiser, schedule, init, config, rng_seed=seed, trace=trace
        )
    trace_text = out.trace.to_jsonl() if trace and out.trace else None
    return seed, out.cloud, trace_text


def cmd_generate(args):
    config, naive, params = _load_config(args.config)
    if args.num_rings is not None:
        config = replace(config, num_rings=args.num_rings)
    seeds = _parse_seeds(args.seeds)
    start_at = args.start_at
    os.makedirs(args.out_dir, exist_ok=True)
    work = [
        (seed, args.n_atoms, args.steps, args.every_k, start_at,
         config.to_dict(), naive.__dict__, params.__dict__,
         args.baseline, args.sigma_init, args.trace_out is not None)
        for seed in seeds
    ]
    if args.threads > 1:
        with ProcessPoolExecutor(max_workers=args.threads) as pool:
            results = list(pool.map(_one_sample, work))
    else:
        results = [_one_sample(w) for w in work]
    trace_chunks = []
    for seed, cloud, trace_text in results:
        path = os.path.join(args.out_dir, f"sample_{seed:05d}.xyz")
        tmp = f"{path}.tmp.{os.getpid()}"
        write_xyz(tmp, cloud, comment=f"seed={seed}")
        os.replace(tmp, path)
        if trace_text is not None:
            trace_chunks.append(trace_text)
    if args.trace_out is not None:
        _atomic_write(args.trace_out, "\n".join(trace_chunks) + "\n")
    resolved = {
        "n_atoms": args.n_atoms, "steps": args.steps, "every_k": args.every_k,
        "start_at": start_at, "baseline": args.baseline, "sigma_init": args.sigma_init,
        "guidance": config.to_dict(), "naive": naive.__dict__,
        "surrogate": params.__dict__, "trace_out": args.trace_out,
        "threads": args.threads, "seeds_arg": args.seeds,
    }
    _write_manifest(args.out_dir, "generate", resolved, seeds)
    if not args.quiet:
        print(f"generate: wrote {len(seeds)} samples to {args.out_dir}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# analyze
# ---------------------------------------------------------------------------


def cmd_analyze(args):
    names = sorted(f for f in os.listdir(args.in_dir) if f.endswith(".xyz"))
    if not names:
        raise CLIError(f"no .xyz files under {args.in_dir}")
    os.makedirs(args.out_dir, exist_ok=True)
    reports = []
    lines = []
    for name in names:
        cloud = read_xyz(os.path.join(args.in_dir, name))
        rep = classify(build_graph(cloud, args.bond_min, args.bond_max))
        reports.append(rep)
        row = {"file": name}
        row.update(rep.to_dict())
        lines.append(json.dumps(row))
    _atomic_write(os.path.join(args.out_dir, "reports.jsonl"), "\n".join(lines) + "\n")
    summary = batch_metrics(reports)
    text = _csv_text([list(summary.values())], list(summary.keys()))
    _atomic_write(os.path.join(args.out_dir, "summary.csv"), text)
    resolved = {
        "in_dir": args.in_dir, "bond_min": args.bond_min, "bond_max": args.bond_max,
    }
    _write_manifest(args.out_dir, "analyze", resolved)
    if not args.quiet:
        print(f"analyze: {len(reports)} files, connectivity "
              f"{summary['connectivity_rate']:.3f}, macrocycle rate "
              f"{summary['macrocycle_rate_connected']:.3f}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# verify-theorem
# ---------------------------------------------------------------------------


def cmd_verify_theorem(args):
    ns = [n for n in _parse_int_range(args.n) if n % 2 == 0]
    if not ns:
        raise CLIError("no even n in range")
    os.makedirs(args.out_dir, exist_ok=True)
    rows = []
    for theta_deg in _parse_floats(args.theta):
        theta = math.radians(theta_deg)
        for ell in _parse_floats(args.ell):
            model = SizeModel(ell=ell, theta=theta)
            for n in ns:
                cloud = crown_polygon(n, ell, theta)
                diagram = rips_persistence(cloud)
                doms = dominant_h1(diagram, 1)
                measured = doms[0].death if doms else float("nan")
                formula = closed_form_death(n, model)
                estimate = linear_size_estimate(formula, model)
                rows.append(
                    [n, ell, theta_deg, formula, measured, abs(measured - formula),
                     estimate, abs(estimate - n) / n]
                )
    header = ["n", "ell", "theta_deg", "closed_form", "rips_measured", "abs_err",
              "linear_estimate", "rel_err"]
    _atomic_write(os.path.join(args.out_dir, "theorem.csv"), _csv_text(rows, header))
    resolved = {"n": args.n, "ell": args.ell, "theta": args.theta}
    _write_manifest(args.out_dir, "verify-theorem", resolved)
    if not args.quiet:
        mism = [r for r in rows if r[5] > 1e-9]
        print(f"verify-theorem: {len(rows)} rows, {len(mism)} with "
              f"closed-form/measured divergence (all at n % 6 == 2; the "
              f"cross-plane chord undercuts the in-plane one there)")
        n14 = [r for r in rows if r[0] == 14]
        if n14:
            print(f"  n=14 linearization relative error: {n14[0][7]:.4f}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# sweep-size
# ---------------------------------------------------------------------------


def _one_bucket_sample(args_tuple):
    (seed, n_atoms, steps, target, hw, cfg_dict, surr_dict, sigma_init) = args_tuple
    config = GuidanceConfig.from_dict(cfg_dict)
    config = replace(config, d_min=target - hw, d_max=target + hw)
    params = SurrogateParams(**surr_dict)
    out = denoise_with_guidance(
        surrogate_denoiser(params), geometric_schedule(T=steps),
        sample_gaussian(n_atoms, sigma_init, seed), config, rng_seed=seed,
    )
    rep = classify(build_graph(out.cloud))
    return rep.connected, rep.largest_chordless_cycle


def cmd_sweep_size(args):
    config, _, params = _load_config(args.config)
    targets = _parse_range(args.targets)
    os.makedirs(args.out_dir, exist_ok=True)
    rows = []
    model_lo = SizeModel(ell=1.5)
    model_hi = SizeModel(ell=1.0)
    for target in targets:
        work = [
            (seed, args.n_atoms, args.steps, target, args.hw,
             config.to_dict(), params.__dict__, args.sigma_init)
            for seed in range(args.seeds_per_bucket)
        ]
        if args.threads > 1:
            with ProcessPoolExecutor(max_workers=args.threads) as pool:
                results = list(pool.map(_one_bucket_sample, work))
        else:
            results = [_one_bucket_sample(w) for w in work]
        sizes = [s for _, s in results]
        connected = [c for c, _ in results]
        rows.append(
            [target, args.seeds_per_bucket, float(np.median(sizes)),
             float(np.mean(connected)),
             linear_size_estimate(target, model_lo),
             linear_size_estimate(target, model_hi)]
        )
    header = ["target_death", "seeds", "median_max_cycle", "connected_fraction",
              "theory_n_ell_1_5", "theory_n_ell_1_0"]
    _atomic_write(os.path.join(args.out_dir, "sweep.csv"), _csv_text(rows, header))
    resolved = {
        "targets": args.targets, "hw": args.hw, "n_atoms": args.n_atoms,
        "steps": args.steps, "seeds_per_bucket": args.seeds_per_bucket,
        "sigma_init": args.sigma_init, "guidance": config.to_dict(),
        "surrogate": params.__dict__, "threads": args.threads,
    }
    _write_manifest(args.out_dir, "sweep-size", resolved)
    if not args.quiet:
        print(f"sweep-size: {len(targets)} buckets x {args.seeds_per_bucket} seeds")
    return EXIT_OK


# ---------------------------------------------------------------------------
# scale-bench
# ---------------------------------------------------------------------------


def cmd_scale_bench(args):
    _, _, params = _load_config(args.config)
    sizes = _parse_int_range(args.sizes)
    os.makedirs(args.out_dir, exist_ok=True)
    rows_dict = connectivity_scaling_experiment(
        sizes=sizes,
        seeds=args.seeds,
        schedule_factory=lambda: geometric_schedule(T=args.steps),
        params=params,
        sigma_init=args.sigma_init,
    )
    rows = [[r["n_atoms"], r["arm"], r["seeds"], r["connected_fraction"]] for r in rows_dict]
    header = ["n_atoms", "arm", "seeds", "connected_fraction"]
    _atomic_write(os.path.join(args.out_dir, "scaling.csv"), _csv_text(rows, header))
    resolved = {
        "sizes": args.sizes, "seeds": args.seeds, "steps": args.steps,
        "sigma_init": args.sigma_init, "surrogate": params.__dict__,
    }
    _write_manifest(args.out_dir, "scale-bench", resolved)
    if not args.quiet:
        print(f"scale-bench: sizes {sizes}, {args.seeds} seeds per arm")
    return EXIT_OK


# ---------------------------------------------------------------------------
# bench
# ---------------------------------------------------------------------------


def cmd_bench(args):
    config, _, params = _load_config(args.config)
    os.makedirs(args.out_dir, exist_ok=True)
    denoiser = surrogate_denoiser(params)
    rows = []
    for k in _parse_int_range(args.ks):
        guidance_s = denoise_s = 0.0
        guided_steps = 0
        for seed in range(args.seeds):
            init = sample_gaussian(args.n_atoms, args.sigma_init, seed)
            out = denoise_with_guidance(
                denoiser, geometric_schedule(T=args.steps, every_k=k),
                init, config, rng_seed=seed,
            )
            guidance_s += out.guidance_seconds
            denoise_s += out.denoise_seconds
            guided_steps += out.n_guided_steps
        per_guid = guidance_s / guided_steps if guided_steps else 0.0
        per_den = denoise_s / (args.steps * args.seeds)
        rows.append(
            [k, args.seeds, guidance_s, denoise_s, per_guid, per_den,
             guidance_s / (guidance_s + denoise_s)]
        )
    header = ["every_k", "seeds", "guidance_seconds", "denoise_seconds",
              "per_guided_step_s", "per_denoise_step_s", "guidance_share"]
    _atomic_write(os.path.join(args.out_dir, "bench.csv"), _csv_text(rows, header))
    resolved = {
        "n_atoms": args.n_atoms, "steps": args.steps, "seeds": args.seeds,
        "ks": args.ks, "sigma_init": args.sigma_init,
        "guidance": config.to_dict(), "surrogate": params.__dict__,
    }
    _write_manifest(args.out_dir, "bench", resolved)
    if not args.quiet:
        base = rows[0]
        print(f"bench: guidance share at k={base[0]}: {base[6]:.2%}")
        for row in rows[1:]:
            print(f"  k={row[0]}: guidance wall time reduced {base[2] / row[2]:.2f}x")
    return EXIT_OK


# ---------------------------------------------------------------------------
# replay
# ---------------------------------------------------------------------------


def cmd_replay(args):
    with open(args.manifest) as fh:
        manifest = json.load(fh)
    command = manifest["command"]
    r = manifest["resolved"]
    argv = [command.replace("_", "-")]

    def put(flag, value):
        if value is not None:
            argv.extend([flag, str(value)])

    if command == "generate":
        put("--n-atoms", r["n_atoms"]); put("--steps", r["steps"])
        put("--seeds", r["seeds_arg"]); put("--every-k", r["every_k"])
        put("--start-at", r.get("start_at")); put("--baseline", r["baseline"])
        put("--sigma-init", r["sigma_init"]); put("--trace-out", r.get("trace_out"))
        cfg = dict(r["guidance"]); cfg["naive"] = r["naive"]; cfg["surrogate"] = r["surrogate"]
    elif command == "analyze":
        put("--in-dir", r["in_dir"]); put("--bond-min", r["bond_min"])
        put("--bond-max", r["bond_max"]); cfg = None
    elif command == "verify-theorem":
        put("--n", r["n"]); put("--ell", r["ell"]); put("--theta", r["theta"]); cfg = None
    elif command == "sweep-size":
        put("--targets", r["targets"]); put("--hw", r["hw"])
        put("--n-atoms", r["n_atoms"]); put("--steps", r["steps"])
        put("--seeds-per-bucket", r["seeds_per_bucket"]); put("--sigma-init", r["sigma_init"])
        cfg = dict(r["guidance"]); cfg["surrogate"] = r["surrogate"]
    elif command == "scale-bench":
        put("--sizes", r["sizes"]); put("--seeds", r["seeds"])
        put("--steps", r["steps"]); put("--sigma-init", r["sigma_init"])
        cfg = {"surrogate": r["surrogate"]}
    elif command == "bench":
        put("--n-atoms", r["n_atoms"]); put("--steps", r["steps"])
        put("--seeds", r["seeds"]); put("--ks", r["ks"]); put("--sigma-init", r["sigma_init"])
        cfg = dict(r["guidance"]); cfg["surrogate"] = r["surrogate"]
    else:
        raise CLIError(f"cannot replay command {command!r}")

    argv.extend(["--out-dir", args.out_dir])
    if cfg is not None:
        os.makedirs(args.out_dir, exist_ok=True)
        cfg_path = os.path.join(args.out_dir, "replay_config.json")
        _atomic_write(cfg_path, json.dumps(cfg))
        argv.extend(["--config", cfg_path])
    if args.quiet:
        argv.append("--quiet")
    return main(argv)


# ---------------------------------------------------------------------------


def _add_common(p):
    p.add_argument("--out-dir", required=True)
    p.add_argument("--config", default=None, help="JSON config file")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--quiet", action="store_true")


def build_parser():
    top = argparse.ArgumentParser(prog="toporing", description=__doc__)
    top.add_argument("--version", action="version", version=__version__)
    sub = top.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="guided sampling to XYZ files")
    _add_common(p)
    p.add_argument("--n-atoms", type=int, default=30)
    p.add_argument("--steps", type=int, default=1000)
    p.add_argument("--seeds", default="0", help="e.g. 7 | 0..4 | 0,3,9")
    p.add_argument("--seed", dest="seeds", help="alias of --seeds")
    p.add_argument("--every-k", type=int, default=1)
    p.add_argument("--start-at", type=int, default=None)
    p.add_argument("--num-rings", type=int, default=None)
    p.add_argument("--trace-out", default=None)
    p.add_argument("--baseline", choices=["none", "naive", "torus-init"], default="none")
    p.add_argument("--sigma-init", type=float, default=2.0)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("analyze", help="ring metrics over a directory of XYZ files")
    _add_common(p)
    p.add_argument("--in-dir", required=True)
    p.add_argument("--bond-min", type=float, default=1.0)
    p.add_argument("--bond-max", type=float, default=2.0)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("verify-theorem", help="crown death formula vs measured persistence")
    _add_common(p)
    p.add_argument("--n", default="8..40")
    p.add_argument("--ell", default="1.0,1.5")
    p.add_argument("--theta", default="109.5,120", help="degrees")
    p.set_defaults(func=cmd_verify_theorem)

    p = sub.add_parser("sweep-size", help="ring size vs target death scale")
    _add_common(p)
    p.add_argument("--targets", default="3.0:6.0:0.1")
    p.add_argument("--hw", type=float, default=0.05)
    p.add_argument("--n-atoms", type=int, default=30)
    p.add_argument("--steps", type=int, default=600)
    p.add_argument("--seeds-per-bucket", type=int, default=50)
    p.add_argument("--sigma-init", type=float, default=2.0)
    p.set_defaults(func=cmd_sweep_size)

    p = sub.add_parser("scale-bench", help="connectivity vs size, H0 guidance on/off")
    _add_common(p)
    p.add_argument("--sizes", default="30,50,70,90,110")
    p.add_argument("--seeds", type=int, default=100)
    p.add_argument("--steps", type=int, default=300)
    p.add_argument("--sigma-init", type=float, default=2.0)
    p.set_defaults(func=cmd_scale_bench)

    p = sub.add_parser("bench", help="per-step guidance cost and every-k reduction")
    _add_common(p)
    p.add_argument("--n-atoms", type=int, default=30)
    p.add_argument("--steps", type=int, default=1000)
    p.add_argument("--seeds", type=int, default=3)
    p.add_argument("--ks", default="1,5")
    p.add_argument("--sigma-init", type=float, default=2.0)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("replay", help="re-run a recorded manifest")
    p.add_argument("manifest")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=cmd_replay)

    return top


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except NonFiniteError as exc:
        print(f"error: numeric abort: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (CLIError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_ARGS


if __name__ == "__main__":
    sys.exit(main())
