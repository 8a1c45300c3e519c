"""Model parameters for the focusing fractional NLS on R^d x T^m."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace


class Kind(enum.Enum):
    ISOTROPIC = "isotropic"
    ANISOTROPIC = "anisotropic"


class Criticality(enum.Enum):
    SUBCRITICAL = "subcritical"
    MASS_CRITICAL = "mass-critical"
    INTERCRITICAL = "intercritical"
    SUPERCRITICAL = "supercritical"


@dataclass(frozen=True)
class ModelParams:
    """Physical parameters of the model.

    ``m = 0`` is accepted only for the pure R^d reference problems (the
    y-independent comparison profiles). ``lam`` scales the torus part of the
    kinetic symbol: isotropic ``(|xi|^2 + lam |k|^2)^sigma``, anisotropic
    ``|xi|^(2 sigma) + lam^sigma |k|^(2 sigma)``.
    """

    d: int
    m: int = 1
    sigma: float = 1.0
    alpha: float = 2.0
    kind: Kind = Kind.ISOTROPIC
    lam: float = 1.0

    def __post_init__(self):
        if not 1 <= self.d <= 4:
            raise ValueError(f"d must be in 1..4, got {self.d}")
        if not 0 <= self.m <= 2:
            raise ValueError(f"m must be in 0..2, got {self.m}")
        if not 0.0 < self.sigma <= 1.0:
            raise ValueError(f"sigma must lie in (0, 1], got {self.sigma}")
        if not self.alpha > 0.0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if not self.lam > 0.0:
            raise ValueError(f"lam must be positive, got {self.lam}")
        if not isinstance(self.kind, Kind):
            object.__setattr__(self, "kind", Kind(self.kind))

    @property
    def dim(self) -> int:
        return self.d + self.m

    @property
    def mass_critical_exponent(self) -> float:
        return 4.0 * self.sigma / self.dim

    @property
    def sobolev_exponent(self) -> float:
        """2_sigma^*; infinite when d + m <= 2 sigma."""
        if self.dim > 2.0 * self.sigma:
            return 4.0 * self.sigma / (self.dim - 2.0 * self.sigma)
        return math.inf

    def criticality(self) -> Criticality:
        a, mc = self.alpha, self.mass_critical_exponent
        if math.isclose(a, mc, rel_tol=1e-12, abs_tol=0.0):
            return Criticality.MASS_CRITICAL
        if a < mc:
            return Criticality.SUBCRITICAL
        if a < self.sobolev_exponent:
            return Criticality.INTERCRITICAL
        return Criticality.SUPERCRITICAL

    def flat(self) -> "ModelParams":
        """The y-free reference model on R^d."""
        return replace(self, m=0, lam=1.0)
