"""curvforge: synthetic curvilinear structures for annotation-light segmentation."""

__version__ = "0.1.0"
