"""Label-map grid: the robot's world memory plus the raster codec.

Conventions used across the package:
  * arrays are indexed (row, col); row grows "south", col grows "east"
  * a cell (r, c) spans [r, r+1) x [c, c+1) in cell units, center (r+.5, c+.5)
  * obstacle states: UNKNOWN / FREE / OCCUPIED (a cell is never both)
  * semantic ids live in [0, n); NO_SEMANTIC marks "no category"
  * explored means directly observed; predicted means filled in by the
    completion model. Observations always win over predictions.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np
from PIL import Image

from .palette import Palette

UNKNOWN = np.uint8(0)
FREE = np.uint8(1)
OCCUPIED = np.uint8(2)

NO_SEMANTIC = np.int16(-1)

LAYERS = ("semantic", "obstacle", "label")


@dataclass
class CropWindow:
    """Axis-aligned square window inside a grid, for later re-projection."""

    row0: int
    col0: int
    side: int

    @property
    def row1(self) -> int:
        return self.row0 + self.side

    @property
    def col1(self) -> int:
        return self.col0 + self.side

    def slices(self) -> tuple[slice, slice]:
        return slice(self.row0, self.row1), slice(self.col0, self.col1)


@dataclass
class LabelMapGrid:
    """Per-cell obstacle state, optional semantic category, and provenance."""

    obstacle: np.ndarray  # (H, W) uint8, UNKNOWN/FREE/OCCUPIED
    semantic: np.ndarray  # (H, W) int16, NO_SEMANTIC or category id
    explored: np.ndarray  # (H, W) bool, directly observed
    predicted: np.ndarray  # (H, W) bool, filled in by completion
    cell_size: float = 0.05  # meters per cell
    robot_trace: list = field(default_factory=list)  # [(row, col), ...]

    @classmethod
    def empty(cls, height: int, width: int, cell_size: float = 0.05) -> "LabelMapGrid":
        return cls(
            obstacle=np.full((height, width), UNKNOWN, dtype=np.uint8),
            semantic=np.full((height, width), NO_SEMANTIC, dtype=np.int16),
            explored=np.zeros((height, width), dtype=bool),
            predicted=np.zeros((height, width), dtype=bool),
            cell_size=cell_size,
        )

    @property
    def height(self) -> int:
        return self.obstacle.shape[0]

    @property
    def width(self) -> int:
        return self.obstacle.shape[1]

    def copy(self) -> "LabelMapGrid":
        return LabelMapGrid(
            obstacle=self.obstacle.copy(),
            semantic=self.semantic.copy(),
            explored=self.explored.copy(),
            predicted=self.predicted.copy(),
            cell_size=self.cell_size,
            robot_trace=list(self.robot_trace),
        )

    def crop(self, window: CropWindow) -> "LabelMapGrid":
        rs, cs = window.slices()
        return LabelMapGrid(
            obstacle=self.obstacle[rs, cs].copy(),
            semantic=self.semantic[rs, cs].copy(),
            explored=self.explored[rs, cs].copy(),
            predicted=self.predicted[rs, cs].copy(),
            cell_size=self.cell_size,
        )

    def known(self) -> np.ndarray:
        """Cells with content, whether observed or predicted."""
        return self.explored | self.predicted

    def validate(self) -> None:
        """Check the structural invariants; raises on violation."""
        known = self.known()
        if np.any((self.obstacle != UNKNOWN) != known):
            raise AssertionError("obstacle state inconsistent with provenance flags")
        if np.any((self.semantic != NO_SEMANTIC) & ~known):
            raise AssertionError("semantic category on a cell without provenance")
        if np.any(self.explored & self.predicted):
            raise AssertionError("cell flagged both explored and predicted")
        for r, c in self.robot_trace:
            if self.obstacle[r, c] != FREE:
                raise AssertionError(f"trace cell ({r},{c}) is not Free")


@dataclass
class ObservationPair:
    """(s_gt, s_masked, c_gt, c_masked, mask) training record."""

    semantic_gt: np.ndarray
    semantic_masked: np.ndarray
    obstacle_gt: np.ndarray
    obstacle_masked: np.ndarray
    mask: np.ndarray  # (H, W) bool, True where observed


def encode(
    grid: LabelMapGrid,
    layer: str,
    palette: Palette,
    include_predicted: bool = True,
) -> np.ndarray:
    """Paint one layer of the grid as an (H, W, 3) uint8 raster.

    semantic: category colors where a category is present, white elsewhere.
    obstacle: free/occupied grays, white on unknown.
    label: semantic color if present, else obstacle color, else white.

    With include_predicted=False only directly observed cells are painted,
    which is how the completion model's conditioning inputs are built.
    """
    if layer not in LAYERS:
        raise ValueError(f"layer must be one of {LAYERS}, got {layer!r}")
    known = grid.explored | grid.predicted if include_predicted else grid.explored
    h, w = grid.obstacle.shape
    raster = np.full((h, w, 3), 255, dtype=np.uint8)

    has_sem = (grid.semantic != NO_SEMANTIC) & known
    colors = np.asarray(palette.category_colors, dtype=np.uint8)
    free = known & (grid.obstacle == FREE)
    occ = known & (grid.obstacle == OCCUPIED)

    if layer in ("obstacle", "label"):
        raster[free] = palette.free_color
        raster[occ] = palette.occupied_color
    if layer == "obstacle":
        return raster
    if layer == "label":
        raster[has_sem] = colors[grid.semantic[has_sem]]
        return raster
    # semantic layer: categories only, everything else stays white
    raster = np.full((h, w, 3), 255, dtype=np.uint8)
    raster[has_sem] = colors[grid.semantic[has_sem]]
    return raster


def decode(
    raster: np.ndarray, palette: Palette, as_predicted: bool = True
) -> LabelMapGrid:
    """Vectorize a label raster back into a grid fragment.

    Every pixel snaps to its nearest palette entry (lowest entry id on
    ties), so continuous diffusion output quantizes cleanly. Category
    pixels become occupied cells carrying that category. The fragment's
    provenance is `predicted` by default; pass as_predicted=False to mark
    content as explored (used by the codec round-trip checks).
    """
    ids = palette.nearest_entries(raster)
    h, w = ids.shape
    frag = LabelMapGrid.empty(h, w)
    is_cat = ids < palette.n_categories
    is_free = ids == palette.free_id
    is_occ = ids == palette.occupied_id
    frag.obstacle[is_free] = FREE
    frag.obstacle[is_occ | is_cat] = OCCUPIED
    frag.semantic[is_cat] = ids[is_cat].astype(np.int16)
    known = is_cat | is_free | is_occ
    if as_predicted:
        frag.predicted[:] = known
    else:
        frag.explored[:] = known
    return frag


def crop_window(grid: LabelMapGrid, center: tuple[int, int], side: int) -> CropWindow:
    """Square window around `center`, clamped to grid bounds.

    A side larger than the grid degrades to the whole grid.
    """
    if side < 8:
        raise ValueError("crop side must be >= 8")
    r, c = center
    if not (0 <= r < grid.height and 0 <= c < grid.width):
        raise ValueError(f"center {center} outside grid")
    side = min(side, grid.height, grid.width)
    row0 = min(max(r - side // 2, 0), grid.height - side)
    col0 = min(max(c - side // 2, 0), grid.width - side)
    return CropWindow(row0, col0, side)


def crop_local(
    grid: LabelMapGrid,
    center: tuple[int, int],
    side: int,
    palette: Palette,
    include_predicted: bool = True,
) -> tuple[dict, CropWindow]:
    """Crop around `center` and encode the three layer rasters.

    Returns {layer: raster} plus the window needed to re-project the crop.
    With include_predicted=False the rasters show observed content only.
    """
    window = crop_window(grid, center, side)
    frag = grid.crop(window)
    rasters = {
        layer: encode(frag, layer, palette, include_predicted=include_predicted)
        for layer in LAYERS
    }
    return rasters, window


def merge_prediction(
    grid: LabelMapGrid, predicted: LabelMapGrid, window: CropWindow
) -> LabelMapGrid:
    """Fuse a predicted fragment into the live grid, anchored on observations.

    Only cells the robot has never directly observed are overwritten; the
    fragment's content replaces any stale prediction there, and merged
    cells carry the predicted flag so later observations take precedence.
    Returns a new grid; the input is untouched.
    """
    if window.row0 < 0 or window.col0 < 0:
        raise ValueError("window out of bounds")
    if window.row1 > grid.height or window.col1 > grid.width:
        raise ValueError("window out of bounds")
    if predicted.obstacle.shape != (window.side, window.side):
        raise ValueError(
            f"fragment shape {predicted.obstacle.shape} does not match window"
        )
    out = grid.copy()
    rs, cs = window.slices()
    writable = ~grid.explored[rs, cs]
    out.obstacle[rs, cs][writable] = predicted.obstacle[writable]
    out.semantic[rs, cs][writable] = predicted.semantic[writable]
    known = predicted.obstacle != UNKNOWN
    out.predicted[rs, cs][writable] = known[writable]
    return out


def make_observation_pair(
    grid_t: LabelMapGrid, grid_final: LabelMapGrid, palette: Palette
) -> ObservationPair:
    """Build the (s_gt, s_m, c_gt, c_m, mask) record from two snapshots.

    The mask is grid_t's explored set; masked rasters equal the final-map
    rasters on mask=1 and are white elsewhere (white is the zero element
    of the element-wise masking).
    """
    if grid_t.obstacle.shape != grid_final.obstacle.shape:
        raise ValueError("snapshot grids have mismatched dimensions")
    mask = grid_t.explored.copy()
    s_gt = encode(grid_final, "semantic", palette)
    c_gt = encode(grid_final, "obstacle", palette)
    white = np.array(palette.unknown_color, dtype=np.uint8)
    s_m = np.where(mask[..., None], s_gt, white)
    c_m = np.where(mask[..., None], c_gt, white)
    return ObservationPair(
        semantic_gt=s_gt,
        semantic_masked=s_m,
        obstacle_gt=c_gt,
        obstacle_masked=c_m,
        mask=mask,
    )


def save_raster_png(raster: np.ndarray, path, text: dict | None = None) -> None:
    """Write an (H, W, 3) uint8 raster as 8-bit RGB PNG."""
    img = Image.fromarray(raster, mode="RGB")
    _save_png(img, path, text)


def save_mask_png(mask: np.ndarray, path, text: dict | None = None) -> None:
    """Write a boolean mask as 8-bit grayscale PNG with values {0, 255}."""
    img = Image.fromarray(np.where(mask, 255, 0).astype(np.uint8), mode="L")
    _save_png(img, path, text)


def _save_png(img: Image.Image, path, text: dict | None) -> None:
    from PIL.PngImagePlugin import PngInfo

    info = PngInfo()
    for key, value in (text or {}).items():
        info.add_text(key, str(value))
    img.save(path, format="PNG", pnginfo=info)


def load_raster_png(path) -> np.ndarray:
    img = Image.open(path).convert("RGB")
    return np.asarray(img, dtype=np.uint8)


def load_mask_png(path) -> np.ndarray:
    img = Image.open(path).convert("L")
    return np.asarray(img, dtype=np.uint8) >= 128


def raster_png_bytes(raster: np.ndarray) -> bytes:
    buf = io.BytesIO()
    Image.fromarray(raster, mode="RGB").save(buf, format="PNG")
    return buf.getvalue()
