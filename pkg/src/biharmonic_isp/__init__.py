"""Inverse source problem for the biharmonic wave equation from sparse multi-frequency data."""

from .forward import FieldDataset, FrequencyGrid, SensorArray, read_dataset, simulate_dataset, write_dataset
from .indicators import (IndicatorField, QuadratureSpec, SamplingGrid, indicator_boundary, indicator_source_1,
                         indicator_source_2, reciprocity_check)
from .metrics import ErrorReport, normalized_difference_field, relative_error
from .radon import (JumpReport, RadialProfile, circular_radon_exact, count_annular, count_vertex, detect_jumps,
                    differentiate_profile, radon_from_dataset)
from .sources import boundary_descriptor, evaluate_source, fixture

__version__ = "0.1.0"
