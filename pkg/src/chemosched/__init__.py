"""Chemotherapy treatment scheduling: model, validation, optimization and rescheduling."""

from __future__ import annotations

from .errors import (
    ConfigError,
    CTSError,
    InfeasibleError,
    InputError,
    InstanceError,
    ParseError,
    ScenarioError,
    SizeLimitError,
    UsageError,
)
from .model import (
    Assignment,
    DisruptionSet,
    Instance,
    PhaseDurations,
    Registration,
    ResourcePool,
    Schedule,
    Seat,
    SeatType,
    TimeGrid,
    Variant,
    ats_of,
    occupied_slots,
    phase2_start,
)
from .objective import CostVector, cost_vector, dominates, resched_cost
from .validate import Code, Violation, validate, validate_core, validate_extended, validate_reschedule

__version__ = "0.1.0"
