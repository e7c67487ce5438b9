"""Verification, ground truth and simulation for population protocols."""

from .core import (Configuration, Protocol, ProtocolError, apply_transition, consensus_of,
                   enabled, initial_config, size, successors)
from .io import (FileFormatError, data_path, dump_stage_graphs, load_protocol,
                 load_stage_graphs, save_protocol)
from .oracle import (Converges, CounterExample, NotWellSpecified, Pass, ResourceError, classify,
                     decide_up_to, explore)
from .presburger import check_implication, is_sat, parse_formula, solve
from .protolib import (GENERATORS, GeneratedProtocol, gen_atomic_threshold,
                       gen_diff_power2_first, gen_diff_power2_second, gen_flock_linear,
                       gen_majority, gen_product, gen_remainder, gen_threshold_power2)
from .sim import CutoffReached, StabilizedTo, estimate, simulate_run
from .stagegraph import (CheckReport, RankingFunction, Stage, StageGraph, check_node,
                         check_stage_graph, reach_formula, step_formula)
from .verifier import SynthesisResult, synthesize

__version__ = "0.1.0"

__all__ = [
    "Configuration", "Protocol", "ProtocolError", "apply_transition", "consensus_of", "enabled",
    "initial_config", "size", "successors",
    "FileFormatError", "data_path", "dump_stage_graphs", "load_protocol", "load_stage_graphs",
    "save_protocol",
    "Converges", "CounterExample", "NotWellSpecified", "Pass", "ResourceError", "classify",
    "decide_up_to", "explore",
    "check_implication", "is_sat", "parse_formula", "solve",
    "GENERATORS", "GeneratedProtocol", "gen_atomic_threshold", "gen_diff_power2_first",
    "gen_diff_power2_second", "gen_flock_linear", "gen_majority", "gen_product", "gen_remainder",
    "gen_threshold_power2",
    "CutoffReached", "StabilizedTo", "estimate", "simulate_run",
    "CheckReport", "RankingFunction", "Stage", "StageGraph", "check_node", "check_stage_graph",
    "reach_formula", "step_formula",
    "SynthesisResult", "synthesize",
]
