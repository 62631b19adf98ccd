"""
Round implementations.

Importing this package registers every algorithm with ``federation.base_algorithm``.
"""

from . import drdm, drfa, fedavg, scaffold  # noqa: F401
