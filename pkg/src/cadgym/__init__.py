"""cadgym: a training gym for CAD command-sequence reconstruction.

A CSG geometry kernel, face-adjacency-graph observations, a small
command DSL, geometric+neural rewards, and a PPO trainer, all in numpy.
"""

from .geometry import (ArcSegment, Classification, Extrude, LineSegment,
                       Plane, Profile, Revolve, Solid, circle, eval_surface,
                       polygon, rectangle, regular_polygon)

__version__ = "0.1.0"

__all__ = [
    "Plane", "Profile", "LineSegment", "ArcSegment",
    "rectangle", "circle", "regular_polygon", "polygon",
    "Extrude", "Revolve", "Solid", "Classification", "eval_surface",
    "__version__",
]
