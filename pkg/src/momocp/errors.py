"""Errors shared across module boundaries."""


class IoError(Exception):
    """Reading or writing an external file or stream failed."""
