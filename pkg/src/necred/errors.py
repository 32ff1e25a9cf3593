"""Exception hierarchy shared by the workbench modules."""

from __future__ import annotations


class NecredError(Exception):
    """Base class for all errors raised by necred."""


class NetworkError(NecredError, ValueError):
    """A network or instance description is structurally invalid."""


class CycleError(NetworkError):
    def __init__(self, cycle):
        self.cycle = list(cycle)
        super().__init__("cycle detected: " + " -> ".join(map(str, self.cycle)))


class DanglingEndpointError(NetworkError):
    def __init__(self, edge_id, node):
        self.edge_id = edge_id
        self.node = node
        super().__init__(f"edge {edge_id!r} references unknown node {node!r}")


class CapacityError(NetworkError):
    def __init__(self, edge_id, capacity):
        self.edge_id = edge_id
        self.capacity = capacity
        super().__init__(f"edge {edge_id!r} has nonpositive capacity {capacity!r}")


class LimitExceeded(NecredError):
    """An exhaustive enumeration would exceed a configured limit.

    ``limit`` names the knob (``max_patterns``, ``max_messages``,
    ``max_cut_edges``, ``max_table_entries``, ``max_codes``).
    """

    def __init__(self, limit: str, required: int, allowed: int):
        self.limit = limit
        self.required = required
        self.allowed = allowed
        super().__init__(f"{limit} exceeded: need {required}, limit is {allowed}")


class CodeMismatch(NecredError, ValueError):
    """A code does not fit the instance topology, widths, or block length."""


class NotGadgetError(NecredError, ValueError):
    """An operation that needs a reduction gadget was given something else."""


class FingerprintMismatch(NecredError, ValueError):
    """Transfer tables were built from a different code."""


class PreconditionError(NecredError, ValueError):
    """Arguments violate a documented precondition."""


class InvariantViolation(NecredError, AssertionError):
    """A combinatorial invariant that must hold for every valid input failed."""
