"""Desk-scale exact simulation of non-collapsing measurement readouts and
the puzzle constructions built on them."""

__version__ = "0.1.0"

from .dist import FiniteDist, sd
from .qsim import Circuit, Gate, Step, bell_circuit, enumerate_branches
from .ncmo import OracleOutput, oracle_exact, oracle_sample
from .puzzles import per_step_sd, step_adversary
from .dcrpuzz import DcrScheme, col, col_law, col_oracle_gap, load_scheme
from .primitives import ToyCommitment, ToyMac, toy_commitment, toy_mac
from .acceptance import Check, run_criterion, run_suite

__all__ = [
    "Check",
    "Circuit",
    "DcrScheme",
    "FiniteDist",
    "Gate",
    "OracleOutput",
    "Step",
    "ToyCommitment",
    "ToyMac",
    "__version__",
    "bell_circuit",
    "col",
    "col_law",
    "col_oracle_gap",
    "enumerate_branches",
    "load_scheme",
    "oracle_exact",
    "oracle_sample",
    "per_step_sd",
    "run_criterion",
    "run_suite",
    "sd",
    "step_adversary",
    "toy_commitment",
    "toy_mac",
]
