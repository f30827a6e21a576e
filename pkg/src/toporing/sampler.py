"""Guided denoising loop, schedules, surrogate denoiser, and descent drivers.

The loop runs t = T..1: one denoiser step, then (on scheduled steps) one
guidance evaluation whose displacement is added scaled by lambda. Guidance
schedules support every-k application and late starts. The surrogate
denoiser is a stand-in for a trained model at desk scale: nearest-neighbor
springs toward a preferred spacing, short-range repulsion, and annealed
Gaussian noise. A run is a pure function of (seed, schedule, config,
denoiser parameters).
"""

import math
import time
from dataclasses import dataclass, field, replace
from typing import Callable, NamedTuple

import numpy as np

from .geometry import as_cloud, pairwise_distances
from .persistence import rips_persistence, dominant_h1
from .guidance import GuidanceConfig, GuidanceResult, guidance_delta, evaluate_terms
from .analysis import build_graph

__all__ = [
    "NonFiniteError",
    "DenoiseSchedule",
    "geometric_schedule",
    "SurrogateParams",
    "surrogate_denoiser",
    "StepRecord",
    "SampleTrace",
    "RunResult",
    "denoise_with_guidance",
    "pure_descent",
    "connectivity_scaling_experiment",
]


class NonFiniteError(RuntimeError):
    """A coordinate became NaN/Inf during sampling; reports the step index."""

    def __init__(self, step: int, where: str):
        super().__init__(f"non-finite coordinates after {where} at step t={step}")
        self.step = step
        self.where = where


@dataclass(frozen=True)
class DenoiseSchedule:
    """Noise scales plus the guidance application pattern.

    Guidance fires at steps {t <= start_at : (start_at - t) % every_k == 0},
    counting steps t = T..1; start_at = 0 disables guidance entirely.
    """

    sigmas: np.ndarray
    every_k: int = 1
    start_at: int | None = None

    def __post_init__(self):
        sig = np.asarray(self.sigmas, dtype=np.float64)
        if sig.ndim != 1 or sig.size < 1:
            raise ValueError("sigmas must be a nonempty 1-D sequence")
        if not np.all(sig > 0.0):
            raise ValueError("noise scales must be positive")
        if np.any(np.diff(sig) > 0.0):
            raise ValueError("noise scales must be nonincreasing")
        object.__setattr__(self, "sigmas", sig)
        if self.start_at is None:
            object.__setattr__(self, "start_at", self.T)
        if self.every_k < 1:
            raise ValueError(f"every_k must be >= 1, got {self.every_k}")
        if not (0 <= self.start_at <= self.T):
            raise ValueError(f"start_at must lie in [0, T], got {self.start_at}")

    @property
    def T(self) -> int:
        return int(self.sigmas.size)

    def guidance_steps(self) -> frozenset:
        if self.start_at == 0:
            return frozenset()
        return frozenset(range(self.start_at, 0, -self.every_k))

    def sigma_at(self, t: int) -> float:
        # t counts down from T to 1; sigmas[0] is applied first.
        return float(self.sigmas[self.T - t])


def geometric_schedule(
    T: int = 1000,
    sigma_hi: float = 2.0,
    sigma_lo: float = 0.01,
    every_k: int = 1,
    start_at: int | None = None,
) -> DenoiseSchedule:
    """Geometric decay from sigma_hi to sigma_lo over T steps."""
    if T < 1:
        raise ValueError(f"need at least one step, got T={T}")
    if not (sigma_hi >= sigma_lo > 0.0):
        raise ValueError("need sigma_hi >= sigma_lo > 0")
    sigmas = np.geomspace(sigma_hi, sigma_lo, T)
    return DenoiseSchedule(sigmas=sigmas, every_k=every_k, start_at=start_at)


@dataclass(frozen=True)
class SurrogateParams:
    """Soft pairwise energy of the surrogate denoiser.

    k_bond scales the nearest-neighbor spring, r0 is the preferred spacing,
    sigma_floor keeps a minimum jitter late in the run. k_rep and rep_range
    shape the short-range repulsion (active below rep_range * r0);
    step_scale is the explicit-Euler step applied to the total force,
    noise_gain converts schedule sigmas into coordinate noise.
    """

    k_bond: float = 1.0
    r0: float = 1.4
    sigma_floor: float = 0.01
    k_rep: float = 1.5
    rep_range: float = 0.8
    step_scale: float = 0.25
    noise_gain: float = 0.1

    def __post_init__(self):
        if self.k_bond <= 0.0 or self.r0 <= 0.0:
            raise ValueError("k_bond and r0 must be positive")
        if self.sigma_floor < 0.0 or self.noise_gain < 0.0:
            raise ValueError("noise parameters must be nonnegative")


def surrogate_denoiser(params: SurrogateParams = SurrogateParams()) -> Callable:
    """One reverse step: spring to the current nearest neighbor at r0,
    repulsion below rep_range * r0 from all atoms, annealed noise."""

    def step(cloud: np.ndarray, sigma: float, rng: np.random.Generator) -> np.ndarray:
        n = cloud.shape[0]
        force = np.zeros_like(cloud)
        if n > 1:
            diff = cloud[:, None, :] - cloud[None, :, :]
            dist = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
            np.fill_diagonal(dist, np.inf)
            nn = np.argmin(dist, axis=1)
            d_nn = dist[np.arange(n), nn]
            toward = (cloud[nn] - cloud) / d_nn[:, None]
            force += params.k_bond * (d_nn - params.r0)[:, None] * toward

            cutoff = params.rep_range * params.r0
            close = dist < cutoff
            if np.any(close):
                overlap = np.where(close, cutoff - dist, 0.0)
                safe = np.where(dist > 0.0, dist, 1.0)
                push = diff / safe[..., None] * overlap[..., None]
                force += params.k_rep * push.sum(axis=1)
        noise_scale = params.noise_gain * max(sigma, params.sigma_floor)
        return (
            cloud
            + params.step_scale * force
            + noise_scale * rng.standard_normal(cloud.shape)
        )

    return step


class StepRecord(NamedTuple):
    """Per-step trace row; ring fields are None when no H1 pair exists."""

    step: int
    sigma: float
    max_h0_death: float
    h1_birth: float | None
    h1_death: float | None
    denoise_norm: float
    guidance_norm: float
    f_total: float
    f_h1_death: float
    f_h1_birth: float
    f_h0: float
    guided: bool


@dataclass
class SampleTrace:
    records: list = field(default_factory=list)

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def to_jsonl(self) -> str:
        import json

        return "\n".join(json.dumps(r._asdict()) for r in self.records)


@dataclass
class RunResult:
    cloud: np.ndarray
    trace: SampleTrace | None
    guidance_seconds: float
    denoise_seconds: float
    n_guided_steps: int


def _check_finite(cloud, step, where):
    if not np.all(np.isfinite(cloud)):
        raise NonFiniteError(step, where)


def _trace_row(cloud, config, step, sigma, denoise_norm, guidance_norm, guided):
    diagram = rips_persistence(cloud)
    res = evaluate_terms(cloud, diagram, config)
    finite_h0 = diagram.finite_h0_deaths()
    dom = dominant_h1(diagram, 1)
    return StepRecord(
        step=step,
        sigma=sigma,
        max_h0_death=float(finite_h0.max()) if finite_h0.size else 0.0,
        h1_birth=dom[0].birth if dom else None,
        h1_death=dom[0].death if dom else None,
        denoise_norm=denoise_norm,
        guidance_norm=guidance_norm,
        f_total=res.total,
        f_h1_death=res.term_h1_death,
        f_h1_birth=res.term_h1_birth,
        f_h0=res.term_h0,
        guided=guided,
    )


def denoise_with_guidance(
    denoiser: Callable,
    schedule: DenoiseSchedule,
    x_init,
    config: GuidanceConfig,
    rng_seed: int,
    trace: bool = False,
    guidance_fn: Callable | None = None,
) -> RunResult:
    """Run the reverse loop with guidance applied after each scheduled update.

    guidance_fn(cloud) -> GuidanceResult defaults to the topological
    objective under `config`; the naive baseline passes its own. The
    returned displacement is scaled by config.lambda_ here. Aborts with
    NonFiniteError (reporting the step) if coordinates blow up. Trace rows,
    when requested, describe the post-update cloud of every step and
    recompute their feature values independently of guidance_fn.
    """
    x = as_cloud(x_init).copy()
    if guidance_fn is None:
        guidance_fn = lambda c: guidance_delta(c, config)
    guided_steps = schedule.guidance_steps()
    records = SampleTrace() if trace else None
    lam = config.lambda_
    guidance_seconds = 0.0
    denoise_seconds = 0.0
    n_guided = 0
    rng = np.random.default_rng(rng_seed)

    for t in range(schedule.T, 0, -1):
        sigma = schedule.sigma_at(t)
        t0 = time.perf_counter()
        x_new = denoiser(x, sigma, rng)
        denoise_seconds += time.perf_counter() - t0
        _check_finite(x_new, t, "denoiser update")
        denoise_norm = float(np.linalg.norm(x_new - x))
        guidance_norm = 0.0
        guided = t in guided_steps
        if guided:
            t0 = time.perf_counter()
            res = guidance_fn(x_new)
            guidance_seconds += time.perf_counter() - t0
            n_guided += 1
            if lam != 0.0:
                x_new = x_new + lam * res.displacement
                _check_finite(x_new, t, "guidance update")
            guidance_norm = float(lam * np.linalg.norm(res.displacement))
        if trace:
            records.records.append(
                _trace_row(x_new, config, t, sigma, denoise_norm, guidance_norm, guided)
            )
        x = x_new

    return RunResult(
        cloud=x,
        trace=records,
        guidance_seconds=guidance_seconds,
        denoise_seconds=denoise_seconds,
        n_guided_steps=n_guided,
    )


def pure_descent(
    x_init,
    config: GuidanceConfig,
    steps: int,
    step_size: float,
    trace: bool = True,
):
    """Plain gradient descent on the topological objective, no denoiser.

    Iterates x <- x + step_size * displacement(x). Used to study the
    objective in isolation (masking dynamics, convergence from noise).
    Returns (cloud, trace); the trace, when enabled, is computed on the full
    diagram each step.
    """
    if step_size <= 0.0:
        raise ValueError(f"step size must be positive, got {step_size}")
    x = as_cloud(x_init).copy()
    records = SampleTrace() if trace else None
    for s in range(steps):
        res = guidance_delta(x, config)
        x_new = x + step_size * res.displacement
        _check_finite(x_new, steps - s, "descent update")
        if trace:
            move = float(step_size * np.linalg.norm(res.displacement))
            records.records.append(
                _trace_row(x_new, config, steps - s, 0.0, 0.0, move, True)
            )
        x = x_new
    return x, records


def connectivity_scaling_experiment(
    sizes,
    seeds: int,
    schedule_factory: Callable | None = None,
    params: SurrogateParams = SurrogateParams(),
    config: GuidanceConfig | None = None,
    bond_min: float = 1.0,
    bond_max: float = 2.0,
    sigma_init: float = 2.0,
):
    """Connected fraction with connectivity-only guidance vs none, per size.

    Arms share seeds (paired comparison): h0_on enables only the merge-scale
    term; h0_off runs the bare denoiser. Returns one row per (size, arm).
    """
    if not sizes:
        raise ValueError("need at least one size")
    if schedule_factory is None:
        schedule_factory = geometric_schedule
    if config is None:
        config = GuidanceConfig(enable_h1_birth=False, enable_h1_death=False)
    else:
        config = replace(config, enable_h1_birth=False, enable_h1_death=False)
    denoiser = surrogate_denoiser(params)
    rows = []
    for n in sizes:
        connected = {"h0_on": 0, "h0_off": 0}
        for seed in range(seeds):
            init = sigma_init * np.random.default_rng(seed).standard_normal((n, 3))
            for arm in ("h0_on", "h0_off"):
                sched = schedule_factory()
                if arm == "h0_off":
                    sched = DenoiseSchedule(sigmas=sched.sigmas, every_k=sched.every_k, start_at=0)
                out = denoise_with_guidance(denoiser, sched, init, config, rng_seed=seed)
                graph = build_graph(out.cloud, bond_min, bond_max)
                connected[arm] += graph.connected()
        for arm in ("h0_on", "h0_off"):
            rows.append(
                {
                    "n_atoms": int(n),
                    "arm": arm,
                    "seeds": seeds,
                    "connected_fraction": connected[arm] / seeds,
                }
            )
    return rows
