"""Adapters that run external models and emit templot interchange files.

The pipeline never imports this package; every adapter is a standalone
batch script talking through the documented file formats. Each one ships a
dependency-free builtin engine so adapter CI runs without model weights.
"""

__version__ = "0.1.0"
