"""Failed error propagation measurement over MiniLang fault pairs."""

__version__ = "0.1.0"
