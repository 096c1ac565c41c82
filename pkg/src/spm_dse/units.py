"""Byte-size helpers. IEC binary units only (B, kiB, MiB, GiB)."""

import re

KIB = 1024
MIB = 1024 * KIB
GIB = 1024 * MIB

_SUFFIX = {"B": 1, "kiB": KIB, "MiB": MIB, "GiB": GIB}
_SIZE_RE = re.compile(r"^\s*(\d+(?:\.\d+)?)\s*(B|kiB|KiB|MiB|GiB)?\s*$")


def parse_size(text: str | int) -> int:
    """Parse '64kiB', '4 MiB', '512B' or a bare integer (bytes) to bytes.

    Only IEC suffixes are accepted; 'kB'/'KB'/'MB' are rejected to avoid
    decimal/binary ambiguity.
    """
    if isinstance(text, int):
        return text
    m = _SIZE_RE.match(text)
    if not m:
        raise ValueError(f"unparseable size {text!r} (use B, kiB, MiB or GiB)")
    value, suffix = m.groups()
    mult = _SUFFIX["KiB" if suffix == "KiB" else (suffix or "B")]
    size = float(value) * mult
    if size != int(size):
        raise ValueError(f"size {text!r} is not a whole number of bytes")
    return int(size)


def format_size(n: int) -> str:
    """Render bytes with the largest exact IEC unit, e.g. 110592 -> '108 kiB'."""
    for mult, name in ((GIB, "GiB"), (MIB, "MiB"), (KIB, "kiB")):
        if n >= mult and n % mult == 0:
            return f"{n // mult} {name}"
    return f"{n} B"
