"""District data almanac: pipeline and comparative analytics."""

__version__ = "0.1.0"
