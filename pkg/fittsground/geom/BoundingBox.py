################################################################################
#                                                                              #
#   This file is part of the fittsground package                               #
#       coordinate-free GUI grounding with Fitts-Gaussian attention labels     #
#                                                                              #
#   fittsground is distributed under the terms of the MIT License.             #
#       see $FITTSGROUND/LICENSE                                               #
#                                                                              #
################################################################################

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class Point:
    """Location in pixel coordinates (continuous, origin top-left)."""

    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f'point coordinates must be finite, got ({self.x}, {self.y})')


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned rectangle [x1, y1, x2, y2] in pixel coordinates.

    Coordinates are continuous, i.e., sub-pixel boxes are allowed. Width and height are strictly positive.
    """

    x1: float
    y1: float
    x2: float
    y2: float

    def __post_init__(self):
        coords = (self.x1, self.y1, self.x2, self.y2)
        if not all(math.isfinite(c) for c in coords):
            raise ValueError(f'bounding box coordinates must be finite, got {list(coords)}')
        if not (self.x1 < self.x2 and self.y1 < self.y2):
            raise ValueError(f'degenerate bounding box {list(coords)}: need x1 < x2 and y1 < y2')

    @classmethod
    def from_list(cls, coords) -> 'BoundingBox':
        """
        :arg coords: sequence [x1, y1, x2, y2]
        :returns: bounding box
        """
        if len(coords) != 4:
            raise ValueError(f'bounding box needs 4 coordinates, got {len(coords)}')
        return cls(*(float(c) for c in coords))

    def to_list(self) -> list:
        return [self.x1, self.y1, self.x2, self.y2]

    @property
    def width(self) -> float:
        return self.x2 - self.x1

    @property
    def height(self) -> float:
        return self.y2 - self.y1

    @property
    def area(self) -> float:
        return self.width * self.height

    @property
    def center(self) -> Point:
        return Point((self.x1 + self.x2) / 2, (self.y1 + self.y2) / 2)

    def contains(self, p: Point) -> bool:
        """Boundary-inclusive point test."""
        return self.x1 <= p.x <= self.x2 and self.y1 <= p.y <= self.y2

    def inside_image(self, width: float, height: float) -> bool:
        return 0 <= self.x1 and 0 <= self.y1 and self.x2 <= width and self.y2 <= height

    def check_inside(self, width: float, height: float):
        """Raise ValueError unless the box lies within a width x height image."""
        if not self.inside_image(width, height):
            raise ValueError(f'bounding box {self.to_list()} exceeds image of size {width}x{height}')
