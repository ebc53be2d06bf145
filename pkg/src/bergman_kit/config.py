"""Shared numerical constants and default grids."""

from dataclasses import dataclass

import numpy as np

#: Points closer than this to the unit circle (in any coordinate) are rejected.
BOUNDARY_EPS = 1e-14
#: Tolerance for pure arithmetic identities (Moebius identities, covariance).
IDENTITY_TOL = 1e-12
#: Largest admissible kernel truncation tail for a Berezin value.
TAIL_TOL = 1e-8
#: Slack allowed when sampling geometric properties of coverings.
SAMPLING_MARGIN = 1e-6

DEFAULT_MODULI = (0.0, 0.3, 0.6, 0.9, 0.99, 0.999)
DEFAULT_ANGLES = 16


@dataclass(frozen=True)
class RadialGrid:
    """Finite stand-in for a supremum over the polydisc.

    Points are tensor products over axes of ``modulus * exp(i * angle)``.
    """

    moduli: tuple = DEFAULT_MODULI
    angles: int = DEFAULT_ANGLES

    def axis_points(self) -> np.ndarray:
        theta = 2 * np.pi * np.arange(self.angles) / self.angles
        pts = [0j] if 0.0 in self.moduli else []
        for m in self.moduli:
            if m > 0:
                pts.extend(m * np.exp(1j * theta))
        return np.asarray(pts, dtype=complex)

    def points(self, n: int) -> np.ndarray:
        axis = self.axis_points()
        mesh = np.meshgrid(*([axis] * n), indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)


@dataclass(frozen=True)
class VerdictThresholds:
    """Heuristic thresholds for labelling Berezin decay; echoed into reports."""

    vanishing: float = 1e-2
    non_vanishing: float = 1e-1
    radii: tuple = (0.0, 0.3, 0.6, 0.9, 0.99, 0.999)
    directions: int = 8
    r_ladder: tuple = (0.5, 0.7, 0.9, 0.95)
    b_radius: float = 1.0
