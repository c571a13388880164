"""Turn raw annotated text into bisyn dataset files and embedding archives."""

__version__ = "0.1.0"
