"""Small in-process black boxes for demos and tests.

Each takes the list of point values (variable order) and returns the
output vector, raises to crash, or raises :class:`SimulationExit`.
"""

import math

from .harness import SimulationExit, register_blackbox


@register_blackbox("log_square")
def log_square(values):
    """``(log x)^2``; fails for ``x <= 0`` like an unguarded simulator."""
    return [math.log(values[0]) ** 2]


@register_blackbox("styrene_like")
def styrene_like(values):
    """Objective, 7 quantifiable outputs (<= 0) and 4 failure flags.

    Shaped after a chemical-process simulator with seven relaxable
    specifications and four binary convergence checks.
    """
    x1, x2 = values
    f = (x1 - 8.0) ** 2 + (x2 - 8.0) ** 2
    g = [
        x1 + x2 - 10.0,
        x1 - 6.0,
        x2 - 6.0,
        2.0 * x1 + x2 - 18.0,
        x1 + 2.0 * x2 - 18.0,
        x1 * x2 - 30.0,
        (x1 - 5.0) ** 2 + (x2 - 5.0) ** 2 - 30.0,
    ]
    flags = [
        float(x1 < 0.5),
        float(x2 < 0.5),
        float(x1 + x2 < 1.5),
        float(abs(x1 - x2) > 8.0),
    ]
    return [f, *g, *flags]


@register_blackbox("diverging_solver")
def diverging_solver(values):
    """Exits with documented code 3 when the inner solve diverges (x > 2)."""
    x = values[0]
    if x > 2.0:
        raise SimulationExit(3)
    if x < -2.0:
        raise SimulationExit(7)
    return [x * x]
