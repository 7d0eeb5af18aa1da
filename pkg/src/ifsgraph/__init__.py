"""Transition graphs of self-similar measures with overlaps.

The package builds the finite-type transition graph of an iterated
function system of similarities on the line, exactly, and uses it for
local dimensions, a combinatorial multifractal-formalism verdict and
numeric L^q spectra.
"""

from .config import RunConfig, dump_config, load_config, parse_config
from .errors import IFSGraphError
from .field import Generator, ParameterContext, ParamValue
from .graph import Budget, TransitionGraph, build_graph, contract_single_child, to_dot, to_json
from .ifs import IFS, Similarity
from .matrix import TransitionMatrix, spectral_radius
from .multifractal import (concave_conjugate, dimension_bounds, lq_spectrum, mf_formalism_check, path_data,
                           periodic_dimension, pumped_family, simple_cycles, vector_form)
from .netiv import AttractorOracle, NeighbourSet, children, global_net_intervals

__version__ = "0.1.0"
