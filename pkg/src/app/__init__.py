from .traffic import (
    DestinationRule,
    Sink,
    TrafficGenerator,
    TrafficProfile,
    choose_destination,
    packet_bits,
    start_generator,
)

__all__ = [
    "DestinationRule",
    "Sink",
    "TrafficGenerator",
    "TrafficProfile",
    "choose_destination",
    "packet_bits",
    "start_generator",
]
