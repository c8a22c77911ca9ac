"""Shared bits for the file-format parsers."""


class FormatError(ValueError):
    """Malformed or unsupported input file."""


def as_bytes(data) -> bytes:
    """Accept bytes, str, or a binary file-like object."""
    if isinstance(data, bytes):
        return data
    if isinstance(data, str):
        return data.encode("utf-8")
    return data.read()
