"""Dimensional synthesis of fully parallel robots with collaboration-safety
and drive-load objectives."""

from .families import FAMILIES, Family, get_family
from .model import RobotModel

__all__ = ["FAMILIES", "Family", "get_family", "RobotModel"]

__version__ = "0.1.0"
