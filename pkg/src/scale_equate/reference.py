"""Built-in national classification thresholds (raw-score ranges).

Ranges are inclusive ``(low, high)`` raw scores for households without and
with children. The lower bound of a level is the cut used when equating.
"""

from __future__ import annotations

from .errors import ConfigError

LEVELS = ("mild", "moderate", "severe")

NATIONAL_THRESHOLDS: dict[str, dict[str, dict[str, tuple[int, int]]]] = {
    "ELCSA": {
        "without_children": {"mild": (1, 3), "moderate": (4, 6), "severe": (7, 8)},
        "with_children": {"mild": (1, 5), "moderate": (6, 10), "severe": (11, 15)},
    },
    "EMSA": {
        "without_children": {"mild": (1, 2), "moderate": (3, 4), "severe": (5, 6)},
        "with_children": {"mild": (1, 3), "moderate": (4, 7), "severe": (8, 12)},
    },
    "EBIA": {
        "without_children": {"mild": (1, 3), "moderate": (4, 6), "severe": (7, 8)},
        "with_children": {"mild": (1, 5), "moderate": (6, 10), "severe": (11, 15)},
    },
}


def national_scale_name(scale_id: str) -> str | None:
    """Match a scale id such as ``"ELCSA-GT"`` or ``"emsa"`` to a built-in scale."""
    up = scale_id.upper()
    for name in NATIONAL_THRESHOLDS:
        if up == name or up.startswith(name + "-") or up.startswith(name + "_"):
            return name
    return None


def lower_thresholds(scale: str, children: bool = False) -> dict[str, int]:
    """Lower raw-score bounds of the moderate and severe levels."""
    name = national_scale_name(scale)
    if name is None:
        raise ConfigError(f"no built-in thresholds for scale {scale!r}; "
                          f"known: {sorted(NATIONAL_THRESHOLDS)}")
    col = "with_children" if children else "without_children"
    ranges = NATIONAL_THRESHOLDS[name][col]
    return {"moderate": ranges["moderate"][0], "severe": ranges["severe"][0]}


def format_range(lo: int, hi: int) -> str:
    return f"{lo} to {hi}"
