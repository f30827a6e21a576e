"""Topological ring guidance for iterative 3D point-cloud generation."""

__version__ = "0.1.0"

from .geometry import (
    as_cloud,
    pairwise_distances,
    centroid,
    crown_polygon,
    regular_polygon,
    ellipse_ring,
    sample_gaussian,
    sample_torus,
    write_xyz,
    read_xyz,
)
from .persistence import (
    PersistencePair,
    PersistenceDiagram,
    rips_persistence,
    brute_force_persistence,
    dominant_h1,
    h0_merge_events,
)
from .size_control import (
    SizeModel,
    closed_form_death,
    ngon_death,
    linear_size_estimate,
    target_interval_for_size,
    crown_shortcut_death,
)
from .guidance import (
    GuidanceConfig,
    GuidanceResult,
    h1_death_term,
    h1_birth_term,
    h0_death_term,
    guidance_delta,
)
from .sampler import (
    NonFiniteError,
    DenoiseSchedule,
    geometric_schedule,
    SurrogateParams,
    surrogate_denoiser,
    SampleTrace,
    RunResult,
    denoise_with_guidance,
    pure_descent,
    connectivity_scaling_experiment,
)
from .analysis import (
    MoleculeGraph,
    TopoReport,
    build_graph,
    largest_chordless_cycle,
    chordless_cycle_search,
    classify,
    batch_metrics,
)
from .baselines import NaiveConfig, naive_cycle_loss, naive_guided_sampling
