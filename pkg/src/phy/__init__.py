"""Radio medium: transmission timing, carrier sensing and collisions."""

from .channel import ChannelId, Medium, PhyParams, TransmissionRecord, transmission_duration

__all__ = ["ChannelId", "Medium", "PhyParams", "TransmissionRecord", "transmission_duration"]
