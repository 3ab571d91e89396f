"""User-side fair recommendation on top of a black-box item-to-item provider."""
__version__ = "0.1.0"
