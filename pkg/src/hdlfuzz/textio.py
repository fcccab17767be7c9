"""Shared bit-table text format used by traces and stimulus files.

Header: one `name width` line per signal. Blank line. Then one line per
cycle: the bits of every signal concatenated in header order, each signal
most-significant bit first, characters limited to {0,1}, LF line endings.
"""

from .errors import HdlError


class BitTableError(HdlError):
    pass


def dump_bit_table(signals, rows) -> str:
    lines = [f"{name} {width}" for name, width in signals]
    lines.append("")
    total = sum(w for _, w in signals)
    for row in rows:
        bits = []
        for (name, width), value in zip(signals, row):
            bits.append(format(value, f"0{width}b"))
        line = "".join(bits)
        if len(line) != total:
            raise BitTableError("row does not match declared widths")
        lines.append(line)
    return "\n".join(lines) + "\n"


def parse_bit_table(text: str):
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    signals = []
    i = 0
    while i < len(lines) and lines[i] != "":
        parts = lines[i].split()
        if len(parts) != 2 or not parts[1].isdigit() or int(parts[1]) < 1:
            raise BitTableError(f"bad header line {i + 1}: {lines[i]!r}")
        signals.append((parts[0], int(parts[1])))
        i += 1
    if i >= len(lines):
        if not signals:
            raise BitTableError("empty bit table")
        return tuple(signals), ()
    i += 1  # blank separator
    total = sum(w for _, w in signals)
    rows = []
    for j in range(i, len(lines)):
        line = lines[j]
        if len(line) != total or set(line) - {"0", "1"}:
            raise BitTableError(f"bad data line {j + 1}: {line!r}")
        row = []
        pos = 0
        for _, width in signals:
            row.append(int(line[pos:pos + width], 2))
            pos += width
        rows.append(tuple(row))
    return tuple(signals), tuple(rows)
