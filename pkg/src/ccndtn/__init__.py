"""Content-centric networking over delay-tolerant mobile networks: protocol,
simulator and analytic model."""

__version__ = "0.1.0"
