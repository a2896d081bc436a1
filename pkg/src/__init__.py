"""wpansim - discrete-event simulator for IEEE 802.15.4 WPAN topology comparisons."""

__version__ = "0.1.0"

