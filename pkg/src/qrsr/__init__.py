"""Make stylized images scannable as QR codes."""

__version__ = "0.1.0"
