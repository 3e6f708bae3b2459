"""Discrete toolkit for BV and W^{1,1} extension on dyadic grids."""

from .errors import (BVError, ContractViolation, InvalidInputError, ParseError,
                     ResolutionError, ScaleError, UndefinedRatioError)
from .grid import (CellSet, ComponentLabeling, EdgeMeasure, Grid, GridFunction,
                   closure, complement_components, density_at, open_interior,
                   perimeter, total_variation)
from .whitney import (DyadicCube, PartitionOfUnity, WhitneyDecomposition,
                      collar_variation_profile, partition_of_unity, smooth_bv,
                      whitney_decompose)

__version__ = "0.1.0"
from .coarea import (LevelProfile, LevelSelection, assemble_extension, coarea_check,
                     select_levels, superlevel)
from .planar import (BoundaryCycle, ExtensionResult, GridPath, JordanDecomposition,
                     hset_report, interior_path, jordan_decompose, quasiconvex_path,
                     strong_perimeter_extend_jordan, strong_perimeter_extend_set)
from .gallery import DomainSpec, build_domain, classify_density, make_domain
