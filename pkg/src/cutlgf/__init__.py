"""Penalty-free surface CutFEM on a Cartesian grid, stabilized through
lattice-Green's-function harmonic extension of the cut-cell unknowns."""

from .errors import (CgBreakdown, CutLgfError, DegenerateCut, DivergentMode,
                     EmptyInterface, IsolatedSource, LanczosNotConverged,
                     NoAdmissibleDirection, SingularLayerBlock, UnknownSolution,
                     WindowTooSmall)
from .geometry import (CutTopology, Grid, InterfaceSegment, LevelSet,
                       circle_levelset, classify_vertices,
                       deformed_circle_levelset, extract_interface,
                       levelset_by_name, load_levelset_grid)
from .krylov import SolveReport, condition_number, pcg
from .layers import (LayerBlocks, build_double_layer, build_single_layer,
                     bulk_evaluate, harmonic_extend)
from .lgf import (LatticeField, LgfTable, build_table, default_window, lgf_eval,
                  particular_solution)
from .problems import ManufacturedProblem, ProblemSpec, manufactured_problem
from .reduction import (Extrapolation, ReducedSystem, build_extrapolation,
                        build_reduced_system, density_map, value_map)
from .surface import SurfaceSystem, assemble_surface_system, local_stiffness
from .symbols import (SymbolProfile, composite_symbol, layer_symbols,
                      predicted_condition, stiffness_symbol, symbol_profile)

__version__ = "0.1.0"
