"""Reviewed submission of pending events with at-least-once semantics."""

from __future__ import annotations

from ..collector import RejectedItem, SubmitReceipt
from .buffer import PENDING, EventBuffer
from .transport import TransportError

CHUNK = 1000  # collector batch ceiling


def submit_selected(buffer: EventBuffer, ids: list[str], transport) -> SubmitReceipt:
    """Send the selected pending events through the transport.

    Local state changes only after every chunk made it to the server:
    accepted and duplicate elements become submitted, rejected ones stay
    pending with the rejection attached.  A TransportError leaves every
    selected event pending, so a blind retry is always safe; the server's
    dedup turns the replay into duplicates.
    """
    for eid in ids:
        ev = buffer.get(eid)
        if ev is None:
            raise KeyError(f"unknown event id {eid!r}")
        if ev.state != PENDING:
            raise ValueError(f"event {eid!r} is not pending")

    merged = SubmitReceipt()
    chunks: list[list[str]] = [ids[i : i + CHUNK] for i in range(0, len(ids), CHUNK)]
    receipts: list[SubmitReceipt] = []
    for chunk in chunks:
        batch = [buffer.get(eid).envelope.to_tree() for eid in chunk]
        receipts.append(transport.submit(batch))  # TransportError propagates

    for chunk, receipt in zip(chunks, receipts):
        rejected_indices = {item.index for item in receipt.rejected}
        accepted_ids = [
            eid for i, eid in enumerate(chunk) if i not in rejected_indices
        ]
        buffer.mark_submitted(accepted_ids)
        for item in receipt.rejected:
            buffer.attach_error(chunk[item.index], item.errors)
            merged.rejected.append(
                RejectedItem(
                    index=ids.index(chunk[item.index]), errors=item.errors
                )
            )
        merged.accepted += receipt.accepted
        merged.duplicates += receipt.duplicates
    return merged
