"""Rotated box and convex polygon IoU with analytic gradients.

Polygons are (n, 2) float arrays listed counter-clockwise, 3 to 8 vertices.
2D boxes are (cx, cy, w, h, theta); 3D boxes are (cx, cy, cz, w, h, d, theta)
with yaw-only rotation. Invalid input raises DiffgeoError, whose ``code``
attribute names the failure (e.g. "NotCCW", "InvalidBox").
"""

from ._core import (
    DiffgeoError,
    batch_iou_2d,
    batch_iou_3d,
    box_iou_2d,
    box_iou_2d_grad,
    box_iou_3d,
    box_iou_3d_grad,
    box_to_polygon,
    intersect,
    polygon_area,
    polygon_iou,
    polygon_iou_grad,
)

__all__ = [
    "DiffgeoError",
    "batch_iou_2d",
    "batch_iou_3d",
    "box_iou_2d",
    "box_iou_2d_grad",
    "box_iou_3d",
    "box_iou_3d_grad",
    "box_to_polygon",
    "intersect",
    "polygon_area",
    "polygon_iou",
    "polygon_iou_grad",
]

__version__ = "0.1.0"
