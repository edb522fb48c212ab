"""Exchangeable random partitions of even and balanced type: exact laws, samplers, audits."""

__version__ = "0.1.0"
