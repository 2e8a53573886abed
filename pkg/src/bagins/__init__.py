"""Individualized numerical scales for linguistic pairwise comparisons (BAGINS)."""

__version__ = "0.1.0"

from .heuristic import (
    IndividualizationConfig,
    IndividualizationResult,
    individualize_scale,
    objective,
    oracle_grid_search,
)
from .pcm import (
    Direction,
    Judgment,
    LinguisticPCM,
    PCMFormatError,
    ScaleAssignment,
    parse_pcm,
    realize,
    serialize_pcm,
    validate_pcm,
)
from .priority import (
    ConsistencyReport,
    RandomIndexTable,
    consistency,
    default_ri_table,
    derive_random_index,
    eigen_priority,
    geomean_priority,
)

__all__ = [
    "ConsistencyReport",
    "Direction",
    "IndividualizationConfig",
    "IndividualizationResult",
    "Judgment",
    "LinguisticPCM",
    "PCMFormatError",
    "RandomIndexTable",
    "ScaleAssignment",
    "consistency",
    "default_ri_table",
    "derive_random_index",
    "eigen_priority",
    "geomean_priority",
    "individualize_scale",
    "objective",
    "oracle_grid_search",
    "parse_pcm",
    "realize",
    "serialize_pcm",
    "validate_pcm",
]
