"""Color parsing and deterministic collision repair for entity palettes."""

from __future__ import annotations

import colorsys
import re

_HEX_RE = re.compile(r"#?([0-9a-fA-F]{6})")

# Golden-angle hue step: successive rotations spread evenly around the wheel.
GOLDEN_ANGLE = 137.50776405003785

FALLBACK_COLOR = "#808080"


def parse_hex(color: str) -> tuple[int, int, int] | None:
    m = _HEX_RE.fullmatch(color.strip())
    if not m:
        return None
    h = m.group(1)
    return int(h[0:2], 16), int(h[2:4], 16), int(h[4:6], 16)


def to_hex(rgb: tuple[int, int, int]) -> str:
    return "#{:02X}{:02X}{:02X}".format(*rgb)


def rotate_hue(color: str, degrees: float) -> str:
    rgb = parse_hex(color)
    if rgb is None:
        rgb = parse_hex(FALLBACK_COLOR)
        assert rgb is not None
    h, s, v = colorsys.rgb_to_hsv(*(c / 255.0 for c in rgb))
    # Grays have no hue to rotate; nudge saturation so rotation is visible.
    if s < 0.05:
        s = 0.5
    if v < 0.05:
        v = 0.5
    h = (h + degrees / 360.0) % 1.0
    r, g, b = colorsys.hsv_to_rgb(h, s, v)
    return to_hex((round(r * 255), round(g * 255), round(b * 255)))


def ensure_distinct(colors: list[str]) -> tuple[list[str], list[int]]:
    """Repair duplicate or unparseable colors by golden-angle hue rotation.

    Returns the repaired list (all valid, pairwise distinct, uppercase hex)
    and the indices that were changed.
    """
    taken: set[str] = set()
    repaired: list[str] = []
    changed: list[int] = []
    for i, color in enumerate(colors):
        rgb = parse_hex(color)
        canonical = to_hex(rgb) if rgb is not None else None
        if canonical is None:
            canonical = FALLBACK_COLOR
            changed.append(i)
        if canonical in taken:
            if i not in changed:
                changed.append(i)
            step = 1
            candidate = canonical
            while candidate in taken:
                candidate = rotate_hue(canonical, GOLDEN_ANGLE * step)
                step += 1
                if step > 720:  # full palette exhausted; bail deterministically
                    candidate = to_hex(((step * 37) % 256, (step * 59) % 256, (step * 83) % 256))
            canonical = candidate
        taken.add(canonical)
        repaired.append(canonical)
    return repaired, changed
