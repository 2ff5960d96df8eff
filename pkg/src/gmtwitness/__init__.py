"""Witness constructions for Kakeya- and Nikodym-type sets built from translated cones."""
from .errors import GeometryError
from .planar import DirectedLine, DoubleCone, DualCone, Point2, Strip

__all__ = ["DirectedLine", "DoubleCone", "DualCone", "GeometryError", "Point2", "Strip"]
__version__ = "0.1.0"
