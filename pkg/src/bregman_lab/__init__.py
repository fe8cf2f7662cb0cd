"""Bregman-divergence algorithms over Legendre generators, with numerical
probes of the two boundary conditions that make a generator a Bregman function."""

__version__ = "0.1.0"

from .domains import Ball, Box, Domain, DomainError, Polytope, Simplex  # noqa: E402
from .generators import (  # noqa: E402
    GENERATORS,
    BallGen,
    FermiDirac,
    Generator,
    HalfSquaredNorm,
    NegEntropy,
)
from .divergence import bregman, divergence, inner_gap  # noqa: E402
from .objectives import OBJECTIVES, Objective  # noqa: E402
from .algorithms import (  # noqa: E402
    Trajectory,
    alternating_projections,
    bregman_gradient,
    bregman_projection,
    fejer_diagnose,
    mirror_descent,
    proximal_d,
)
from .probes import (  # noqa: E402
    disk_counterexample,
    probe_chord_blowup,
    probe_condition_a,
    probe_condition_b,
    probe_usc,
)
from .config import ConfigError, ExperimentConfig, parse_config  # noqa: E402
from .experiment import RunRecord, load_record, run_experiment  # noqa: E402
from .plotting import emit_plot  # noqa: E402
