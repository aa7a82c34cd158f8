"""Fixed color palette for visualized label maps.

Category colors are generated on the golden-angle hue wheel so any two
categories stay far apart in RGB space; unknown is pure white and the
free/occupied grays sit outside the saturated hue ring. The palette is the
single source of truth for raster encoding and decoding.
"""

from __future__ import annotations

import colorsys
import math
from dataclasses import dataclass, field

import numpy as np

GOLDEN_ANGLE_DEG = 137.50776

UNKNOWN_COLOR = (255, 255, 255)
FREE_COLOR = (230, 230, 230)
OCCUPIED_COLOR = (80, 80, 80)

MAX_CATEGORIES = 64


def _category_color(i: int) -> tuple[int, int, int]:
    hue = (i * GOLDEN_ANGLE_DEG) % 360.0
    r, g, b = colorsys.hsv_to_rgb(hue / 360.0, 0.75, 0.85)
    # round-half-up keeps the mapping bit-exact across platforms
    return tuple(int(math.floor(c * 255.0 + 0.5)) for c in (r, g, b))


@dataclass(frozen=True)
class Palette:
    """Bijective category/obstacle <-> RGB coding.

    Entry ids: 0..n-1 are categories, n is unknown, n+1 free, n+2 occupied.
    """

    n_categories: int
    category_colors: tuple[tuple[int, int, int], ...] = field(init=False)

    def __post_init__(self):
        if not 1 <= self.n_categories <= MAX_CATEGORIES:
            raise ValueError(f"n_categories must be in [1, {MAX_CATEGORIES}]")
        colors = tuple(_category_color(i) for i in range(self.n_categories))
        object.__setattr__(self, "category_colors", colors)
        entries = colors + (UNKNOWN_COLOR, FREE_COLOR, OCCUPIED_COLOR)
        if len(set(entries)) != len(entries):
            raise ValueError(
                f"palette collision with n_categories={self.n_categories}"
            )

    @property
    def unknown_color(self) -> tuple[int, int, int]:
        return UNKNOWN_COLOR

    @property
    def free_color(self) -> tuple[int, int, int]:
        return FREE_COLOR

    @property
    def occupied_color(self) -> tuple[int, int, int]:
        return OCCUPIED_COLOR

    @property
    def unknown_id(self) -> int:
        return self.n_categories

    @property
    def free_id(self) -> int:
        return self.n_categories + 1

    @property
    def occupied_id(self) -> int:
        return self.n_categories + 2

    def entry_table(self) -> np.ndarray:
        """All palette entries as an (n+3, 3) uint8 array in entry-id order."""
        rows = list(self.category_colors) + [UNKNOWN_COLOR, FREE_COLOR, OCCUPIED_COLOR]
        return np.asarray(rows, dtype=np.uint8)

    def nearest_entries(self, raster: np.ndarray) -> np.ndarray:
        """Map each RGB pixel to the nearest palette entry id.

        Distance is Euclidean in RGB; ties resolve to the lowest entry id.
        Input is (H, W, 3) uint8, output (H, W) int.
        """
        table = self.entry_table().astype(np.int32)
        px = raster.astype(np.int32).reshape(-1, 1, 3)
        d2 = np.sum((px - table[None, :, :]) ** 2, axis=2)
        # argmin takes the first minimum, which is the lowest entry id
        ids = np.argmin(d2, axis=1).astype(np.int32)
        return ids.reshape(raster.shape[:2])
