"""Closed-form relations between ring atom count and Rips H1 death scale.

All functions are pure scalar evaluations. `closed_form_death` evaluates
the crown-polygon death formula verbatim; `ngon_death` the planar regular
polygon one; `linear_size_estimate` the large-n linearization (its O(1)
term is unspecified upstream and dropped here). Angles are radians.

Measured caveat, documented by the verify-theorem CLI and the tests: for
even n with n % 6 == 2 the measured Rips death of the actual crown polygon
falls below `closed_form_death`, because a chord between the two z-planes
spanning 2*ceil(n/6) - 1 vertex steps undercuts the in-plane chord the
formula assumes. For all other even n the formula is exact to 1e-9.
"""

import math
from dataclasses import dataclass

__all__ = [
    "SizeModel",
    "closed_form_death",
    "ngon_death",
    "linear_size_estimate",
    "target_interval_for_size",
    "crown_shortcut_death",
]


@dataclass(frozen=True)
class SizeModel:
    """Bond length (Angstroms) and bond angle (radians) of an idealized ring."""

    ell: float = 1.5
    theta: float = math.radians(109.5)

    def __post_init__(self):
        if self.ell <= 0.0:
            raise ValueError(f"bond length must be positive, got {self.ell}")
        if not (0.0 < self.theta < math.pi):
            raise ValueError(f"bond angle must lie in (0, pi), got {self.theta}")


def closed_form_death(n: int, model: SizeModel) -> float:
    """Crown-polygon H1 death: ell*sqrt(2(1-cos theta)) * sin(ceil(n/6)*2pi/n)/sin(2pi/n)."""
    if n % 2 != 0 or n < 4:
        raise ValueError(f"crown death formula needs even n >= 4, got {n}")
    side2 = model.ell * math.sqrt(2.0 * (1.0 - math.cos(model.theta)))
    k = math.ceil(n / 6)
    return side2 * math.sin(k * 2.0 * math.pi / n) / math.sin(2.0 * math.pi / n)


def ngon_death(n: int, ell: float) -> float:
    """Planar regular n-gon H1 death: ell * sin(ceil(n/3)*pi/n) / sin(pi/n)."""
    if n < 3:
        raise ValueError(f"polygon death needs n >= 3, got {n}")
    k = math.ceil(n / 3)
    return ell * math.sin(k * math.pi / n) / math.sin(math.pi / n)


def crown_shortcut_death(n: int, model: SizeModel) -> float:
    """Measured crown death for n % 6 == 2: the cross-plane shortcut chord.

    The crown's vertices share one circle radius r and alternate between
    planes z = +-c; the chord between opposite-parity vertices spanning
    j = 2*ceil(n/6) - 1 steps has length 2*sqrt(r^2 sin^2(j pi/n) + c^2),
    which is what the Rips filtration actually realizes as the dominant
    death when it is shorter than the in-plane chord.
    """
    if n % 2 != 0 or n < 4:
        raise ValueError(f"crown shortcut needs even n >= 4, got {n}")
    side2 = model.ell * math.sqrt(2.0 * (1.0 - math.cos(model.theta)))
    delta = 2.0 * math.pi / n
    r = side2 / (2.0 * math.sin(delta))
    c_sq = (model.ell**2 - (2.0 * r * math.sin(delta / 2.0)) ** 2) / 4.0
    if c_sq < 0.0:
        raise ValueError(f"no real crown with n={n} at this model")
    j = 2 * math.ceil(n / 6) - 1
    return 2.0 * math.sqrt((r * math.sin(j * math.pi / n)) ** 2 + c_sq)


def linear_size_estimate(d: float, model: SizeModel) -> float:
    """Large-n inversion of the crown death formula: n ~ 4pi/sqrt(6(1-cos theta)) * d/ell."""
    if d <= 0.0:
        raise ValueError(f"death scale must be positive, got {d}")
    coeff = 4.0 * math.pi / math.sqrt(6.0 * (1.0 - math.cos(model.theta)))
    return coeff * d / model.ell


def target_interval_for_size(
    n_target: int, model: SizeModel, half_width: float
) -> tuple:
    """Death-scale interval centered on the closed-form death of an n_target ring."""
    if half_width <= 0.0:
        raise ValueError(f"half width must be positive, got {half_width}")
    center = closed_form_death(n_target, model)
    return (center - half_width, center + half_width)
