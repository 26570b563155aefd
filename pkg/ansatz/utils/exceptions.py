"""Errors raised by the domain modules; plain precondition failures use ValueError."""


class AnsatzError(Exception):
    """Base class for domain failures that the CLI reports as a command error"""


class InfeasibleGraphError(AnsatzError, ValueError):
    """Topology/size combination cannot produce a connected simple graph"""


class DegenerateInstanceError(AnsatzError, ValueError):
    """Minimum and maximum energy coincide, the approximation ratio is undefined"""


class TrainingDivergedError(AnsatzError):
    """Non-finite gradients during a PPO update"""


class EmptyHistoryError(AnsatzError, ValueError):
    """Fine-tuning requested before any circuit was built"""


class MissingInstanceError(AnsatzError, FileNotFoundError):
    """Instance files were not generated before running an experiment"""
