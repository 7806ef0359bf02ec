"""Agent SDK: local collection buffer, review filters, and reference agents.

Collection and transfer are deliberately separate concerns: an agent records
into a durable local buffer and a transport pushes reviewed batches to the
collector later, so nothing leaves the machine without an explicit submit.
"""

from .buffer import BufferFullError, DuplicateEventError, EventBuffer, LocalEvent
from .filters import ReviewFilter
from .submit import submit_selected
from .synthetic import run_synthetic_agent, synthetic_descriptors, synthetic_events
from .transport import CollectorClient, LocalTransport, TransportError
from .vcs import NotARepositoryError, run_vcs_agent

__all__ = [
    "BufferFullError",
    "DuplicateEventError",
    "EventBuffer",
    "LocalEvent",
    "ReviewFilter",
    "submit_selected",
    "run_synthetic_agent",
    "synthetic_descriptors",
    "synthetic_events",
    "CollectorClient",
    "LocalTransport",
    "TransportError",
    "NotARepositoryError",
    "run_vcs_agent",
]
