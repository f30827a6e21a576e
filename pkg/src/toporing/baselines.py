"""Comparison arms: virtual-ring geometric guidance and torus initialization.

The geometric baseline imposes a cyclic order on the first subset_size
atoms and penalizes consecutive distances outside [ell_min, ell_max] plus
opposite-pair distances below o_min (hinge-squared throughout). Unlike the
topological objective its gradient is dense over the subset. Torus
initialization is not a loss; the sampling CLI swaps the Gaussian initial
cloud for a solid-torus sample.
"""

from dataclasses import dataclass

import numpy as np

from .geometry import as_cloud
from .guidance import GuidanceConfig, GuidanceResult
from .sampler import DenoiseSchedule, RunResult, denoise_with_guidance

__all__ = ["NaiveConfig", "naive_cycle_loss", "naive_guided_sampling"]


@dataclass(frozen=True)
class NaiveConfig:
    subset_size: int = 12
    ell_min: float = 1.0
    ell_max: float = 2.0
    o_min: float = 3.0

    def __post_init__(self):
        if self.subset_size % 2 != 0 or self.subset_size < 4:
            raise ValueError(
                f"subset size must be even and >= 4 (opposite pairs), got {self.subset_size}"
            )
        if not (0.0 < self.ell_min < self.ell_max):
            raise ValueError(
                f"need 0 < ell_min < ell_max, got [{self.ell_min}, {self.ell_max}]"
            )
        if self.o_min <= 0.0:
            raise ValueError(f"o_min must be positive, got {self.o_min}")

    @classmethod
    def from_dict(cls, data: dict) -> "NaiveConfig":
        known = {"subset_size", "ell_min", "ell_max", "o_min"}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown naive config keys: {sorted(unknown)}")
        return cls(**data)


def naive_cycle_loss(cloud, config: NaiveConfig):
    """Virtual-ring loss and its exact dense gradient over the atom subset.

    The first subset_size atoms (index order) get a cyclic ordering: each
    consecutive pair is hinged into [ell_min, ell_max] and each pair of
    atoms n/2 apart is hinged above o_min, both squared. Every index i
    contributes one edge and one opposite term, so each unordered pair is
    counted twice, matching the sum convention of the reference values.
    Returns (value, gradient).
    """
    cloud = as_cloud(cloud)
    n = config.subset_size
    if cloud.shape[0] < n:
        raise ValueError(f"cloud has {cloud.shape[0]} atoms, subset needs {n}")
    grad = np.zeros_like(cloud)
    value = 0.0

    def hinge_pair(i, j, low, high):
        nonlocal value
        d = float(np.linalg.norm(cloud[i] - cloud[j]))
        if low is not None and d < low:
            v = low - d
            value += v * v
            coeff = -2.0 * v
        elif high is not None and d > high:
            v = d - high
            value += v * v
            coeff = 2.0 * v
        else:
            return
        if d > 0.0:
            direction = (cloud[i] - cloud[j]) / d
            grad[i] += coeff * direction
            grad[j] -= coeff * direction
        # coincident points: the hinge has no defined direction, subgradient 0

    half = n // 2
    for i in range(n):
        hinge_pair(i, (i + 1) % n, config.ell_min, config.ell_max)
        hinge_pair(i, (i + half) % n, config.o_min, None)
    return value, grad


def naive_guided_sampling(
    denoiser,
    schedule: DenoiseSchedule,
    x_init,
    naive: NaiveConfig,
    lambda_: float = 1.0,
    rng_seed: int = 0,
    trace: bool = False,
    trace_config: GuidanceConfig | None = None,
) -> RunResult:
    """The guided loop with the virtual-ring gradient in place of the
    topological one. Trace feature rows, when requested, still report
    topological quantities (under trace_config's thresholds)."""
    cfg = trace_config or GuidanceConfig(lambda_=lambda_)
    if cfg.lambda_ != lambda_:
        from dataclasses import replace

        cfg = replace(cfg, lambda_=lambda_)

    def gfn(cloud):
        value, grad = naive_cycle_loss(cloud, naive)
        active = np.nonzero(np.any(grad != 0.0, axis=1))[0]
        return GuidanceResult(
            total=value,
            term_h1_death=0.0,
            term_h1_birth=0.0,
            term_h0=0.0,
            displacement=-grad,
            active_atoms=tuple(int(a) for a in active),
            rings_missing=0,
        )

    return denoise_with_guidance(
        denoiser, schedule, x_init, cfg, rng_seed, trace=trace, guidance_fn=gfn
    )
