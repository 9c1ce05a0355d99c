"""Deep recurrent level-set segmentation on 2D grids."""

__version__ = "0.1.0"
