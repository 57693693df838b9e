"""Scanning-robustness checks: camera tilt, success rates, error overlays, sweeps.

Tilt is a pinhole camera looking straight at the code plane, which is then
turned about its vertical center axis. Decoding a tilted image uses the exact
inverse homography of that projection, so no code localization is involved.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from qrsr.errors import DecodeError, DegenerateProjection
from qrsr.geometry import warp
from qrsr.imaging import to_rgb
from qrsr.qr_core.decoder import decode, rectify
from qrsr.qr_core.raster import rasterize
from qrsr.qr_core.symbol import ModuleMatrix, encode
from qrsr.qr_core.tables import CodeConfig
from qrsr.srl import srl

TINT = np.array([1.0, 0.0, 0.0])


@dataclass(frozen=True)
class TiltSpec:
    """Rotation of the code plane about its vertical center axis.

    Args:
        degrees: Rotation angle; the near edge is the left one for positive angles.
        focal: Camera focal length in units of the image width. The plane sits
            at this depth, so an untilted image maps onto itself.
    """

    degrees: float = 0.0
    focal: float = 1.2

    def __post_init__(self):
        if not abs(self.degrees) < 90.0:
            raise DegenerateProjection(f"a {self.degrees} degree tilt puts the plane edge-on or behind the camera")
        if not self.focal > 0:
            raise ValueError("focal must be positive")


def _translate(tx: float, ty: float) -> np.ndarray:
    return np.array([[1.0, 0.0, tx], [0.0, 1.0, ty], [0.0, 0.0, 1.0]])


def tilt_homography(size: int, spec: TiltSpec) -> tuple[np.ndarray, int]:
    """Flat-to-tilted homography for a ``size`` x ``size`` image and the tilted canvas side.

    Points are centered, rotated (x' = x cos t, z' = f + x sin t) and projected
    with focal length f = focal * size. The canvas is the smallest centered
    square that holds the projected corners, so it grows when the near edge
    is magnified.
    """
    theta = math.radians(spec.degrees)
    f = spec.focal * size
    cos, sin = math.cos(theta), math.sin(theta)
    center = (size - 1) / 2.0
    plane = np.array([[cos, 0.0, 0.0], [0.0, 1.0, 0.0], [sin / f, 0.0, 1.0]])
    corners = np.array([[-center, -center], [center, -center], [-center, center], [center, center]])
    w = corners[:, 0] * sin / f + 1.0
    reach = max(np.max(np.abs(corners[:, 0] * cos / w)), np.max(np.abs(corners[:, 1] / w)))
    side = max(size, int(math.ceil(2.0 * reach + 1.0 - 1e-9)))
    out_center = (side - 1) / 2.0
    return _translate(out_center, out_center) @ plane @ _translate(-center, -center), side


def tilt_inverse(size: int, spec: TiltSpec) -> tuple[np.ndarray, int]:
    """Tilted-to-flat homography in closed form, with the tilted canvas side."""
    theta = math.radians(spec.degrees)
    f = spec.focal * size
    cos, sin = math.cos(theta), math.sin(theta)
    _, side = tilt_homography(size, spec)
    center, out_center = (size - 1) / 2.0, (side - 1) / 2.0
    plane_inv = np.array([[1.0, 0.0, 0.0], [0.0, cos, 0.0], [-sin / f, 0.0, cos]])
    return _translate(center, center) @ plane_inv @ _translate(-out_center, -out_center), side


def simulate_tilt(image: np.ndarray, spec: TiltSpec) -> tuple[np.ndarray, np.ndarray]:
    """Render ``image`` as seen under ``spec``.

    Returns:
        The tilted image (white background, bilinear resampling) and the
        homography mapping tilted-image points back to ``image`` points.
    """
    image = np.asarray(image, dtype=np.float64)
    if image.shape[0] != image.shape[1]:
        raise ValueError(f"tilt needs a square image, got {image.shape[1]}x{image.shape[0]}")
    if spec.degrees == 0:
        return image.copy(), np.eye(3)
    inverse, side = tilt_inverse(image.shape[0], spec)
    return warp(image, inverse, (side, side), fill=1.0), inverse


def overlay_errors(image: np.ndarray, target: ModuleMatrix, cfg: CodeConfig | None = None) -> np.ndarray:
    """RGB copy of ``image`` with every mis-binarizing module tinted red at 50%."""
    cfg = cfg or CodeConfig()
    gates = srl(image, target, cfg).phi
    out = to_rgb(np.asarray(image, dtype=np.float64)).copy()
    s, q = cfg.module_px, cfg.quiet_px
    for r, c in zip(*np.nonzero(gates)):
        block = out[q + r * s:q + (r + 1) * s, q + c * s:q + (c + 1) * s]
        block[:] = 0.5 * block + 0.5 * TINT
    return out


@dataclass(frozen=True)
class ScanOutcome:
    scannable: bool
    corrections: int
    error_rate: float
    reason: str = ""

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def scan(
    image: np.ndarray,
    payload,
    cfg: CodeConfig | None = None,
    tilt: TiltSpec | None = None,
    target: ModuleMatrix | None = None,
) -> ScanOutcome:
    """Decode ``image`` (tilted first if asked) and compare against ``payload``.

    ``error_rate`` is measured on the rectified image against ``target``
    (default: the plain encoding of ``payload``).
    """
    cfg = cfg or CodeConfig()
    expected = payload.encode("utf-8") if isinstance(payload, str) else bytes(payload)
    target = target if target is not None else encode(expected, cfg)
    inverse = None
    flat = np.asarray(image, dtype=np.float64)
    if tilt is not None and tilt.degrees != 0:
        warped, inverse = simulate_tilt(flat, tilt)
        flat = rectify(warped, inverse, cfg)
    error_rate = srl(flat, target, cfg).error_rate
    try:
        result = decode(flat, cfg)
    except DecodeError as exc:
        return ScanOutcome(False, 0, error_rate, type(exc).__name__)
    if result.payload != expected:
        return ScanOutcome(False, result.total_corrections, error_rate, "payload mismatch")
    return ScanOutcome(True, result.total_corrections, error_rate)


@dataclass
class SsrReport:
    """Scan outcomes over a corpus, optionally tagged with grouping keys."""

    items: list[ScanOutcome] = field(default_factory=list)
    keys: dict = field(default_factory=dict)

    @property
    def size(self) -> int:
        return len(self.items)

    @property
    def successes(self) -> int:
        return sum(1 for o in self.items if o.scannable)

    @property
    def ssr(self) -> float:
        return self.successes / self.size if self.items else 0.0

    def as_dict(self) -> dict:
        return {
            **self.keys,
            "size": self.size,
            "successes": self.successes,
            "ssr": self.ssr,
            "items": [o.as_dict() for o in self.items],
        }

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), sort_keys=True)


def ssr(corpus, cfg: CodeConfig | None = None, tilt: TiltSpec | None = None) -> SsrReport:
    """Scanning success rate of ``corpus``.

    Args:
        corpus: Non-empty sequence of ``(image, payload)`` or
            ``(image, payload, target)`` tuples.
        cfg: Grid geometry shared by every image.
        tilt: Optional camera tilt applied before decoding.
    """
    corpus = list(corpus)
    if not corpus:
        raise ValueError("corpus is empty")
    cfg = cfg or CodeConfig()
    items = []
    for entry in corpus:
        image, payload, *rest = entry
        items.append(scan(image, payload, cfg, tilt, rest[0] if rest else None))
    return SsrReport(items, {"angle": tilt.degrees if tilt else 0.0, "ec_level": cfg.ec_level})


@dataclass(frozen=True)
class SweepCase:
    code: CodeConfig
    tilt: TiltSpec
    message: str


@dataclass
class SweepReport:
    rows: list[SsrReport] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {"rows": [r.as_dict() for r in self.rows]}

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), sort_keys=True)

    def to_table(self) -> str:
        header = ("ec_level", "angle", "message", "size", "scannable", "ssr")
        body = [
            (
                r.keys["ec_level"],
                f"{r.keys['angle']:g}",
                r.keys["message"],
                str(r.size),
                str(r.successes),
                f"{r.ssr:.3f}",
            )
            for r in self.rows
        ]
        widths = [max(len(h), *(len(row[i]) for row in body)) if body else len(h) for i, h in enumerate(header)]
        lines = ["  ".join(h.ljust(w) for h, w in zip(header, widths))]
        lines += ["  ".join(v.ljust(w) for v, w in zip(row, widths)) for row in body]
        return "\n".join(lines) + "\n"


def _repair_one(args):
    from qrsr.refine import RefineConfig, blend, repair

    photo, code, message, refine_overrides = args
    clean = rasterize(encode(message, code), code)
    x0 = blend(photo, clean)
    cfg = RefineConfig.for_level(code.ec_level, **refine_overrides)
    result = repair(x0, message, code, cfg)
    return result.image, result.target


def sweep(
    cases,
    photos,
    refine_overrides: dict | None = None,
    jobs: int = 1,
) -> SweepReport:
    """Repair a 70/30 photo/code blend of every photo for each case and scan it.

    One row per case, in the given order. Repairs are shared between cases
    that differ only in tilt.

    Args:
        cases: Sequence of :class:`SweepCase`.
        photos: Photos already sized to each case's ``image_px``.
        refine_overrides: Extra :class:`~qrsr.refine.RefineConfig` fields; tau
            always follows the case's EC level unless given here.
        jobs: Worker processes for the repairs.
    """
    cases = list(cases)
    if not cases:
        return SweepReport()
    overrides = dict(refine_overrides or {})
    photos = list(photos)
    work = {}
    for case in cases:
        for i in range(len(photos)):
            work.setdefault((case.code, case.message, i), None)
    keys = list(work)
    args = [(photos[i], code, message, overrides) for code, message, i in keys]
    if jobs > 1 and len(args) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_repair_one, args))
    else:
        results = [_repair_one(a) for a in args]
    repaired = dict(zip(keys, results))

    report = SweepReport()
    for case in cases:
        items = []
        for i in range(len(photos)):
            image, target = repaired[(case.code, case.message, i)]
            items.append(scan(image, case.message, case.code, case.tilt, target))
        keys_ = {"angle": case.tilt.degrees, "ec_level": case.code.ec_level, "message": case.message}
        report.rows.append(SsrReport(items, keys_))
    return report
