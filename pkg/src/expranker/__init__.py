"""Build user-item-explanation ranking datasets from reviews and benchmark rankers on them."""

__version__ = "0.1.0"
