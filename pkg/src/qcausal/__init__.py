"""Causal discovery for quantum process matrices."""
from .errors import ContractViolation, DimensionError, LayoutError, ParseError, RejectedInput
from .process import (InputRef, PartySpec, ProcessMatrix, SubsystemRef, SystemLayout,
                      load, save, trace_out, validate)
from .channels import ChoiMatrix
from .discovery import DiscoveryReport, discover

__all__ = [
    "ChoiMatrix", "ContractViolation", "DimensionError", "DiscoveryReport", "InputRef",
    "LayoutError", "ParseError", "PartySpec", "ProcessMatrix", "RejectedInput",
    "SubsystemRef", "SystemLayout", "discover", "load", "save", "trace_out", "validate",
]
__version__ = "0.1.0"
