"""A fixed desk corpus of photos built from scikit-image's bundled samples.

Every photo is a deterministic square crop of a sample image, resized to the
code's pixel extent. :func:`desk_corpus` keeps only photos whose 70/30 blend
with the clean code fails to decode, so each entry actually needs repair.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from qrsr.errors import DecodeError
from qrsr.imaging import resize, to_rgb
from qrsr.qr_core.decoder import decode
from qrsr.qr_core.raster import rasterize
from qrsr.qr_core.symbol import encode
from qrsr.qr_core.tables import CodeConfig

SOURCES = (
    "astronaut",
    "coffee",
    "chelsea",
    "rocket",
    "hubble_deep_field",
    "retina",
    "immunohistochemistry",
    "camera",
    "brick",
    "grass",
    "gravel",
    "moon",
    "horse",
    "clock",
    "colorwheel",
    "cell",
    "coins",
)

# (crop fraction, x anchor, y anchor, mirrored) for successive passes over SOURCES
_VIEWS = (
    (1.00, 0.5, 0.5, False),
    (0.70, 0.2, 0.3, False),
    (0.60, 0.8, 0.7, True),
    (0.80, 0.5, 0.2, True),
    (0.55, 0.3, 0.8, False),
    (0.75, 0.7, 0.4, False),
    (0.50, 0.5, 0.5, True),
)

PAYLOAD = "Thanks reviewer!"


@dataclass(frozen=True)
class CorpusEntry:
    name: str
    photo: np.ndarray
    blend: np.ndarray


def _load(name: str) -> np.ndarray:
    from skimage import data

    img = np.asarray(getattr(data, name)(), dtype=np.float64)
    if img.max() > 1.0:
        img = img / 255.0
    if img.ndim == 3 and img.shape[2] == 4:
        img = img[:, :, :3]
    return to_rgb(img)


def photo(name: str, view: int, size: int) -> np.ndarray:
    """Square crop ``view`` of sample image ``name``, resized to ``size``."""
    frac, ax, ay, mirror = _VIEWS[view % len(_VIEWS)]
    img = _load(name)
    h, w = img.shape[:2]
    side = max(8, int(round(min(h, w) * frac)))
    top = int(round((h - side) * ay))
    left = int(round((w - side) * ax))
    crop = img[top:top + side, left:left + side]
    if mirror:
        crop = crop[:, ::-1]
    return resize(np.ascontiguousarray(crop), size)


def candidates(size: int):
    """All (name, photo) pairs in canonical order."""
    for view in range(len(_VIEWS)):
        for name in SOURCES:
            yield f"{name}-{view}", photo(name, view, size)


def desk_corpus(
    count: int = 50,
    payload: str = PAYLOAD,
    cfg: CodeConfig | None = None,
    photo_weight: float = 0.7,
) -> list[CorpusEntry]:
    """The first ``count`` candidates whose blend with the clean code is unscannable."""
    from qrsr.refine import blend

    cfg = cfg or CodeConfig()
    clean = rasterize(encode(payload, cfg), cfg)
    expected = payload.encode("utf-8")
    out = []
    for name, img in candidates(cfg.image_px):
        mixed = blend(img, clean, photo_weight)
        try:
            ok = decode(mixed, cfg).payload == expected
        except DecodeError:
            ok = False
        if not ok:
            out.append(CorpusEntry(name, img, mixed))
            if len(out) == count:
                return out
    raise RuntimeError(f"only {len(out)} unscannable blends available, wanted {count}")
