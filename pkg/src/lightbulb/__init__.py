"""Correlated-pair search for sign vectors by polynomial amplification of
group scores and fast integer matrix multiplication."""
from __future__ import annotations

from .amplifier import AmplifierPlan, derive_plan, enumerate_basis, multilinear_coeffs
from .corevec import PackedVectorSet, brute_force_best_pair, inner_product
from .detsolvers import solve_findcorr, solve_thm2, solve_thm3
from .errors import (
    CapacityError,
    FormatError,
    GenerationError,
    LightbulbError,
    ParameterError,
    PromiseViolation,
    UsageError,
)
from .instancegen import Instance, gen_findcorr, gen_lightbulb, gen_promise, read_instance, write_instance
from .intmatmul import IntMatrix, matmul
from .randsrc import SeededStream, pairwise_signs, seeded_stream
from .report import SolveReport
from .solver import GroupPartition, solve
from .spherical import SpherePointSet, round_to_cube

__version__ = "0.1.0"
