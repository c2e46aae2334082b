"""Single-shot grid object detection, from the tensor engine up to evaluation."""

__version__ = "0.1.0"
