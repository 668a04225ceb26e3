"""Physical-layer network coding for inter-ONU VPN traffic over a TDM-PON."""

__version__ = "0.1.0"
