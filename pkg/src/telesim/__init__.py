"""Photon-statistics simulator for a narrowband teleportation relay.

Faint-laser qubit photons meet one photon of an SPDC pair at a Bell-state
measurement; the package computes threefold coincidence rates, two-photon
and entanglement visibilities, the DFG noise budget of the qubit source,
and cross-checks the analytic pipeline against a sampling oracle.
"""

from telesim.errors import (
    ConfigError,
    DomainError,
    OracleMismatch,
    TruncationError,
    UndefinedVisibilityError,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "DomainError",
    "OracleMismatch",
    "TruncationError",
    "UndefinedVisibilityError",
    "__version__",
]
