"""templot: training-free template-based icon detection pipeline."""

__version__ = "0.1.0"
