from .plane import Plane, any_perpendicular, unit
from .primitive import Extrude, Revolve, INSIDE, ON_BOUNDARY, OUTSIDE
from .profile import (ArcSegment, LineSegment, Profile, circle, polygon,
                      rectangle, regular_polygon)
from .solid import Classification, Solid, occupancy_grid
from .surface import (ConeSurface, CylinderSurface, PlaneSurface,
                      SphereSurface, TorusSurface, eval_surface)

__all__ = [
    "Plane", "unit", "any_perpendicular",
    "Profile", "LineSegment", "ArcSegment",
    "rectangle", "circle", "regular_polygon", "polygon",
    "Extrude", "Revolve", "INSIDE", "ON_BOUNDARY", "OUTSIDE",
    "Classification", "Solid", "occupancy_grid",
    "PlaneSurface", "CylinderSurface", "ConeSurface", "SphereSurface",
    "TorusSurface", "eval_surface",
]
