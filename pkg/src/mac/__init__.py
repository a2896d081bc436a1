"""Slotted CSMA/CA MAC. Frame types live in `frames`, the procedure in `csma`."""

from .frames import DropCause, Frame, FrameKind

__all__ = ["DropCause", "Frame", "FrameKind"]
