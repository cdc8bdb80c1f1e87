"""Shared numerical tolerances.

All checks are relative to the magnitude of the data they inspect, with an
absolute floor so that comparisons near zero stay meaningful.
"""

DEFAULT_REL = 1e-9

# Absolute floor added to relative tolerances.
ABS_FLOOR = 1e-12

# Frames are rejected when the reciprocal condition estimate drops below this.
RCOND_MIN = 1e-12

# Codomain components within this band of zero count as exact zeros
# (ReLU outputs produce exact zeros, so an absolute band is appropriate).
ZERO_COMPONENT_TOL = 1e-9

# Output weights below this fraction of the largest weight are flagged as
# degenerate directions.
DEGENERATE_DIRECTION_REL = 1e-10

# Subset enumerations are refused above this index dimension (3^21 pairings).
MAX_ENUM_DIM = 20


def scaled(rel: float, magnitude: float, floor: float = ABS_FLOOR) -> float:
    """Tolerance proportional to ``magnitude`` with an absolute floor."""
    return max(rel * (1.0 + magnitude), floor)
