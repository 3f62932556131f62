"""hsced: polar-code construction, subcode-ensemble decoding, and link simulation."""

__version__ = "0.1.0"
