"""Plain-text and delimited report writers."""

from __future__ import annotations

import csv
import hashlib
import json
from pathlib import Path
from typing import Iterable, Sequence

from . import __version__


def value_with_see(value: float, see: float | None) -> str:
    """``3.3 (0.19)`` style: one decimal for the value, two for its SEE."""
    if see is None:
        return f"{value:.1f}"
    return f"{value:.1f} ({see:.2f})"


def file_digest(path: str | Path) -> str:
    h = hashlib.sha256()
    with Path(path).open("rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def format_table(headers: Sequence[Sequence[str] | str], rows: Iterable[Sequence]) -> str:
    """Fixed-width table; a header cell may be a sequence for multi-line headers."""
    head = [[h] if isinstance(h, str) else list(h) for h in headers]
    body = [[str(c) for c in row] for row in rows]
    n_lines = max(len(h) for h in head)
    head = [h + [""] * (n_lines - len(h)) for h in head]
    widths = [max([len(x) for x in head[i]] + [len(r[i]) for r in body])
              for i in range(len(head))]
    rule = "  ".join("-" * w for w in widths)
    lines = [rule]
    for k in range(n_lines):
        lines.append("  ".join(head[i][k].ljust(widths[i]) for i in range(len(head))).rstrip())
    lines.append(rule)
    for r in body:
        lines.append("  ".join(r[i].ljust(widths[i]) for i in range(len(r))).rstrip())
    lines.append(rule)
    return "\n".join(lines)


class TextReport:
    """Accumulates sections and writes them with a reproducibility header."""

    def __init__(self, title: str, config: dict, inputs: Sequence[str | Path] = ()):
        self.title = title
        self.config = config
        self.inputs = [Path(p) for p in inputs if p]
        self.sections: list[tuple[str, str]] = []

    def add(self, heading: str, text: str) -> None:
        self.sections.append((heading, text))

    def render(self) -> str:
        out = [self.title, "=" * len(self.title), "",
               f"software: scale-equate {__version__}",
               f"seed: {self.config.get('seed')}",
               "config: " + json.dumps(self.config, sort_keys=True, default=str)]
        for p in self.inputs:
            out.append(f"input: {p.name} sha256={file_digest(p)}")
        for heading, text in self.sections:
            out += ["", heading, "-" * len(heading), text]
        return "\n".join(out) + "\n"

    def write(self, path: str | Path) -> None:
        Path(path).write_text(self.render(), encoding="utf-8")


def write_csv(path: str | Path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
