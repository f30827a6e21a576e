"""Topological objective on persistence diagrams and its sparse gradient.

Three terms act on critical vertex pairs only: the dominant-ring death is
hinged into a target interval [d_min, d_max], the dominant-ring birth is
hinged below the bond-length cap ell_star, and every finite component-merge
scale is hinged below ell_star. The returned displacement field is the
negated gradient sum, before any step-size weighting (the sampling loop
applies lambda).

The connectivity term supports the centroid mask: per violating merge edge
only the endpoint farther from the cloud centroid is moved, the other is
treated as a constant. Ties go to the larger vertex index so exactly one
endpoint is ever active.
"""

import json
from dataclasses import dataclass, asdict, fields

import numpy as np

from .geometry import as_cloud, centroid
from .persistence import rips_persistence, dominant_h1, h0_merge_events

__all__ = [
    "GuidanceConfig",
    "GuidanceResult",
    "h1_death_term",
    "h1_birth_term",
    "h0_death_term",
    "guidance_delta",
    "evaluate_terms",
]

_JSON_NAMES = {"lambda_": "lambda"}


@dataclass(frozen=True)
class GuidanceConfig:
    lambda_: float = 1.0
    d_min: float = 4.45
    d_max: float = 5.05
    ell_star: float = 2.0
    num_rings: int = 1
    square_h1_birth: bool = False
    square_h1_death: bool = True
    square_h0: bool = True
    enable_h1_birth: bool = True
    enable_h1_death: bool = True
    enable_h0: bool = True
    h0_mask: bool = True

    def __post_init__(self):
        if not (0.0 < self.d_min <= self.d_max):
            raise ValueError(f"need 0 < d_min <= d_max, got [{self.d_min}, {self.d_max}]")
        if self.ell_star <= 0.0:
            raise ValueError(f"ell_star must be positive, got {self.ell_star}")
        if self.lambda_ < 0.0:
            raise ValueError(f"lambda must be nonnegative, got {self.lambda_}")
        if self.num_rings < 1:
            raise ValueError(f"num_rings must be >= 1, got {self.num_rings}")

    def to_dict(self) -> dict:
        out = {}
        for f in fields(self):
            out[_JSON_NAMES.get(f.name, f.name)] = getattr(self, f.name)
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "GuidanceConfig":
        names = {_JSON_NAMES.get(f.name, f.name): f.name for f in fields(cls)}
        unknown = set(data) - set(names)
        if unknown:
            raise ValueError(f"unknown guidance config keys: {sorted(unknown)}")
        return cls(**{names[k]: v for k, v in data.items()})

    @classmethod
    def from_json(cls, text: str) -> "GuidanceConfig":
        return cls.from_dict(json.loads(text))


@dataclass
class GuidanceResult:
    """Objective value, per-term breakdown, and the per-atom displacement.

    displacement is -(sum of enabled term gradients), one row per atom;
    atoms outside active_atoms carry exactly-zero rows. rings_missing
    counts how many of the requested dominant rings were absent from the
    diagram (they contribute nothing).
    """

    total: float
    term_h1_death: float
    term_h1_birth: float
    term_h0: float
    displacement: np.ndarray
    active_atoms: tuple
    rings_missing: int


def _hinge(violation: float, squared: bool):
    """Penalty value and derivative w.r.t. the violating scale, given v > 0."""
    if squared:
        return violation * violation, 2.0 * violation
    return violation, 1.0


def h1_death_term(cloud, diagram, config: GuidanceConfig):
    """Interval hinge on the num_rings largest H1 deaths.

    Returns (value, gradient, rings_missing); the gradient touches only the
    death-edge endpoints of each penalized ring.
    """
    cloud = as_cloud(cloud)
    grad = np.zeros_like(cloud)
    value = 0.0
    doms = dominant_h1(diagram, config.num_rings)
    for pair in doms:
        d = pair.death
        u, v = pair.death_edge
        if d < config.d_min:
            val, dd = _hinge(config.d_min - d, config.square_h1_death)
            value += val
            coeff = -dd  # dF/dd, pushing the death scale up
        elif d > config.d_max:
            val, dd = _hinge(d - config.d_max, config.square_h1_death)
            value += val
            coeff = dd
        else:
            continue
        direction = (cloud[u] - cloud[v]) / d
        grad[u] += coeff * direction
        grad[v] -= coeff * direction
    return value, grad, config.num_rings - len(doms)


def h1_birth_term(cloud, diagram, config: GuidanceConfig):
    """Cap hinge on the num_rings dominant H1 births (longest ring edge proxy)."""
    cloud = as_cloud(cloud)
    grad = np.zeros_like(cloud)
    value = 0.0
    doms = dominant_h1(diagram, config.num_rings)
    for pair in doms:
        b = pair.birth
        if b <= config.ell_star:
            continue
        u, v = pair.birth_edge
        val, db = _hinge(b - config.ell_star, config.square_h1_birth)
        value += val
        direction = (cloud[u] - cloud[v]) / b
        grad[u] += db * direction
        grad[v] -= db * direction
    return value, grad, config.num_rings - len(doms)


def h0_death_term(cloud, diagram, config: GuidanceConfig):
    """Cap hinge on finite component-merge scales, optionally centroid-masked."""
    deaths = [p.death for p in diagram.pairs if p.dim == 0 and p.death != np.inf]
    edges = [p.death_edge for p in diagram.pairs if p.dim == 0 and p.death != np.inf]
    return _h0_core(cloud, deaths, edges, config)


def _h0_core(cloud, deaths, edges, config: GuidanceConfig):
    cloud = as_cloud(cloud)
    grad = np.zeros_like(cloud)
    value = 0.0
    center = None
    for d, (u, v) in zip(deaths, edges):
        if d <= config.ell_star:
            continue
        val, dd = _hinge(d - config.ell_star, config.square_h0)
        value += val
        if config.h0_mask:
            if center is None:
                center = centroid(cloud)
            du = np.linalg.norm(cloud[u] - center)
            dv = np.linalg.norm(cloud[v] - center)
            if du > dv:
                act, oth = u, v
            elif dv > du:
                act, oth = v, u
            else:
                act, oth = max(u, v), min(u, v)
            grad[act] += dd * (cloud[act] - cloud[oth]) / d
        else:
            direction = (cloud[u] - cloud[v]) / d
            grad[u] += dd * direction
            grad[v] -= dd * direction
    return value, grad


def evaluate_terms(cloud, diagram, config: GuidanceConfig) -> GuidanceResult:
    """Assemble the enabled terms against a shared diagram."""
    cloud = as_cloud(cloud)
    grad = np.zeros_like(cloud)
    missing = 0
    v_death = v_birth = v_h0 = 0.0
    if config.enable_h1_death:
        v_death, g, missing = h1_death_term(cloud, diagram, config)
        grad += g
    if config.enable_h1_birth:
        v_birth, g, missing = h1_birth_term(cloud, diagram, config)
        grad += g
    if config.enable_h0:
        v_h0, g = h0_death_term(cloud, diagram, config)
        grad += g
    return _package(v_death, v_birth, v_h0, grad, missing)


def _package(v_death, v_birth, v_h0, grad, missing) -> GuidanceResult:
    active = np.nonzero(np.any(grad != 0.0, axis=1))[0]
    return GuidanceResult(
        total=v_death + v_birth + v_h0,
        term_h1_death=v_death,
        term_h1_birth=v_birth,
        term_h0=v_h0,
        displacement=-grad,
        active_atoms=tuple(int(a) for a in active),
        rings_missing=missing,
    )


def guidance_delta(cloud, config: GuidanceConfig) -> GuidanceResult:
    """One guidance evaluation: diagram once, all enabled terms against it.

    The displacement is pre-lambda; the sampling loop scales it. When both
    ring terms are disabled only the component merges are computed, which
    skips the H1 reduction entirely.
    """
    cloud = as_cloud(cloud)
    if config.enable_h1_death or config.enable_h1_birth:
        diagram = rips_persistence(cloud)
        return evaluate_terms(cloud, diagram, config)
    if config.enable_h0:
        deaths, edges = h0_merge_events(cloud)
        v_h0, grad = _h0_core(cloud, deaths, edges, config)
        return _package(0.0, 0.0, v_h0, grad, 0)
    return _package(0.0, 0.0, 0.0, np.zeros_like(cloud), 0)
