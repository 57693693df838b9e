"""Iterative pixel-space refinement toward a scannable image.

Each iteration takes a projected gradient step, ``x <- clip(x - step * grad)``,
on one of two objectives:

``guided``
    ``srl_weight * SRL + perceptual_weight * P`` while the module error rate
    is at or above ``tau`` (the error-capacity gate).
``polish``
    ``SRL + mpgd_weight * P`` once the error rate is below ``tau``, until no
    module is wrong. With ``polish=False`` the SRL term is switched off below
    ``tau`` instead (``drift``) and the loop ends when the objective settles.

``P`` is the pyramid distance to the reference image. Per-module early
stopping comes from the SRL gates themselves.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field, replace

import numpy as np

from qrsr.errors import DecodeError, ExtentMismatch, InvalidConfig
from qrsr.perceptual import PerceptualRegularizer
from qrsr.qr_core.decoder import decode
from qrsr.qr_core.raster import central_window, check_extent
from qrsr.qr_core.symbol import ModuleMatrix
from qrsr.qr_core.tables import CodeConfig
from qrsr.imaging import quantize
from qrsr.qart import desired_pattern, transform
from qrsr.srl import gated_loss, gaussian_kernel, srl, srl_gradient

log = logging.getLogger(__name__)

TAU_BY_LEVEL = {"L": 0.07, "M": 0.15, "Q": 0.25, "H": 0.30}


@dataclass(frozen=True)
class RefineConfig:
    srl_weight: float = 500.0
    perceptual_weight: float = 3.0
    step_size: float | None = None
    mpgd_weight: float = 0.01
    tau: float = 0.15
    max_iters: int = 200
    step_rule: str = "backtracking"
    polish: bool = True
    pyramid_levels: int = 3
    pyramid_sigma: float = 1.0
    nudge: float = 0.01
    armijo_c: float = 1e-4
    max_halvings: int = 10
    stable_tol: float = 1e-10
    quantize_output: bool = True

    def __post_init__(self):
        if not self.srl_weight > 0:
            raise InvalidConfig("srl_weight must be positive")
        if self.perceptual_weight < 0 or self.mpgd_weight < 0:
            raise InvalidConfig("perceptual weights must be non-negative")
        if not 0.0 < self.tau < 1.0:
            raise InvalidConfig("tau must lie in (0, 1)")
        if not isinstance(self.max_iters, int) or self.max_iters < 1:
            raise InvalidConfig("max_iters must be >= 1")
        if self.step_rule not in ("fixed", "backtracking"):
            raise InvalidConfig("step_rule must be 'fixed' or 'backtracking'")
        if self.step_size is not None and not self.step_size > 0:
            raise InvalidConfig("step_size must be positive")

    def replace(self, **changes) -> "RefineConfig":
        return replace(self, **changes)

    @classmethod
    def for_level(cls, ec_level: str, **changes) -> "RefineConfig":
        return cls(tau=TAU_BY_LEVEL[ec_level], **changes)


@dataclass
class IterationRecord:
    iteration: int
    phase: str
    objective: float
    srl: float
    perceptual: float
    error_rate: float
    step: float
    gate_active: bool
    grad_norm: float
    phi: list[int]
    srl_grad_modules: list[int]
    nudged: list[int]

    def as_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class RefineTrace:
    records: list[IterationRecord] = field(default_factory=list)
    final_image: np.ndarray | None = None
    converged: bool = False
    iterations: int = 0
    final_error_rate: float = 1.0
    stop_reason: str = ""

    def to_jsonl(self) -> str:
        lines = [json.dumps(r.as_dict()) for r in self.records]
        lines.append(json.dumps({
            "final": True,
            "converged": self.converged,
            "iterations": self.iterations,
            "final_error_rate": self.final_error_rate,
            "stop_reason": self.stop_reason,
        }))
        return "\n".join(lines) + "\n"


def _per_module_nonzero(grad: np.ndarray, cfg: CodeConfig) -> np.ndarray:
    m, s, q = cfg.side, cfg.module_px, cfg.quiet_px
    g = grad if grad.ndim == 2 else np.abs(grad).sum(axis=2)
    block = g[q:q + m * s, q:q + m * s].reshape(m, s, m, s)
    return np.any(block != 0, axis=(1, 3))


def _nudge_field(image, target, gates, srl_nonzero, cfg, eps):
    """Push the central submodule of stuck gated modules toward the target."""
    stuck = (gates.astype(bool)) & ~srl_nonzero
    if not stuck.any():
        return None, []
    c0, c = central_window(cfg.module_px)
    s, q = cfg.module_px, cfg.quiet_px
    field_ = np.zeros(image.shape[:2])
    for r, col in zip(*np.nonzero(stuck)):
        sign = 1.0 if target.cells[r, col] else -1.0
        r0, q0 = q + r * s + c0, q + col * s + c0
        field_[r0:r0 + c, q0:q0 + c] = sign * eps
    if image.ndim == 3:
        field_ = field_[:, :, None]
    return field_, [int(r * cfg.side + col) for r, col in zip(*np.nonzero(stuck))]


def objective(x, target, x_ref, cfg: RefineConfig | None = None, code: CodeConfig | None = None):
    """``srl_weight * SRL(x, target) + perceptual_weight * P(x, x_ref)`` and its gradient."""
    cfg = cfg or RefineConfig()
    code = code or CodeConfig()
    x = np.asarray(x, dtype=np.float64)
    x_ref = np.asarray(x_ref, dtype=np.float64)
    if x.shape != x_ref.shape:
        raise ExtentMismatch(f"image {x.shape} and reference {x_ref.shape} differ")
    rep = srl(x, target, code)
    reg = PerceptualRegularizer(cfg.pyramid_levels, cfg.pyramid_sigma)
    if cfg.perceptual_weight:
        p_val, p_grad = reg.value_and_gradient(x, x_ref)
    else:
        p_val, p_grad = 0.0, np.zeros_like(x)
    value = cfg.srl_weight * rep.loss + cfg.perceptual_weight * p_val
    grad = cfg.srl_weight * srl_gradient(x, target, code, rep.phi) + cfg.perceptual_weight * p_grad
    return value, grad


def _auto_step(srl_w: float, perc_w: float, reg: PerceptualRegularizer, shape, code: CodeConfig) -> float:
    if srl_w > 0:
        # a full-weight center pixel moves by about one hinge length
        return code.n_modules / (srl_w * float(gaussian_kernel(code.module_px).max()))
    sizes, h, w = [], shape[0], shape[1]
    depth = shape[2] if len(shape) == 3 else 1
    for _ in range(reg.levels):
        sizes.append(h * w * depth)
        h, w = h // 2, w // 2
    lipschitz = perc_w * 2.0 / reg.levels * sum(1.0 / n for n in sizes)
    return 1.0 / lipschitz if lipschitz > 0 else 1.0


def pgd_refine(
    x0: np.ndarray,
    target: ModuleMatrix,
    x_ref: np.ndarray,
    cfg: RefineConfig | None = None,
    code: CodeConfig | None = None,
) -> tuple[np.ndarray, RefineTrace]:
    """Refine ``x0`` until every module binarizes to ``target`` or the budget runs out."""
    cfg = cfg or RefineConfig()
    code = code or CodeConfig()
    x = np.array(x0, dtype=np.float64)
    x_ref = np.asarray(x_ref, dtype=np.float64)
    check_extent(x, code)
    if x.shape != x_ref.shape:
        raise ExtentMismatch(f"image {x.shape} and reference {x_ref.shape} differ")
    if x.min() < 0.0 or x.max() > 1.0:
        raise ValueError("pixel values must lie in [0, 1]")
    reg = PerceptualRegularizer(cfg.pyramid_levels, cfg.pyramid_sigma)
    trace = RefineTrace()
    moved = False
    prev = None  # (phase, objective)

    for it in range(cfg.max_iters):
        rep = srl(x, target, code)
        if rep.error_rate == 0.0:
            if cfg.quantize_output and moved:
                xq = quantize(x)
                if srl(xq, target, code).error_rate == 0.0:
                    x = xq
                    trace.stop_reason = "error_rate_zero"
                    break
                # 8-bit rounding broke a marginal module; keep refining from the rounded image
                x = xq
                moved = False
                rep = srl(x, target, code)
            else:
                trace.stop_reason = "error_rate_zero"
                break

        gate = rep.error_rate >= cfg.tau
        if gate:
            phase, srl_w, perc_w = "guided", cfg.srl_weight, cfg.perceptual_weight
        elif cfg.polish:
            phase, srl_w, perc_w = "polish", 1.0, cfg.mpgd_weight
        else:
            phase, srl_w, perc_w = "drift", 0.0, cfg.perceptual_weight

        gates = rep.phi
        if srl_w > 0:
            g_srl = srl_w * srl_gradient(x, target, code, gates)
        else:
            g_srl = np.zeros_like(x)
        if perc_w > 0:
            p_val, g_p = reg.value_and_gradient(x, x_ref)
            g_p = perc_w * g_p
        else:
            p_val, g_p = 0.0, np.zeros_like(x)
        obj = srl_w * rep.loss + perc_w * p_val
        grad = g_srl + g_p
        srl_nonzero = _per_module_nonzero(g_srl, code)

        if phase == "drift":
            settled = prev is not None and prev[0] == "drift" and abs(prev[1] - obj) <= cfg.stable_tol * max(1.0, abs(obj))
            if settled or not grad.any():
                trace.stop_reason = "stable"
                break

        nudge, nudged = (None, [])
        if srl_w > 0:
            nudge, nudged = _nudge_field(x, target, gates, srl_nonzero, code, cfg.nudge)

        def f(z):
            val = perc_w * reg.value(z, x_ref) if perc_w > 0 else 0.0
            if srl_w > 0:
                val += srl_w * gated_loss(z, target, gates, code)
            return val

        step = cfg.step_size if cfg.step_size is not None else _auto_step(srl_w, perc_w, reg, x.shape, code)
        x_new = x
        taken = 0.0
        if grad.any():
            if cfg.step_rule == "fixed":
                x_new = np.clip(x - step * grad, 0.0, 1.0)
                taken = step
            else:
                for _ in range(cfg.max_halvings):
                    cand = np.clip(x - step * grad, 0.0, 1.0)
                    if f(cand) <= obj + cfg.armijo_c * float(np.sum(grad * (cand - x))):
                        x_new, taken = cand, step
                        break
                    step *= 0.5
        if nudge is not None:
            x_new = np.clip(x_new + nudge, 0.0, 1.0)

        trace.records.append(IterationRecord(
            iteration=it,
            phase=phase,
            objective=obj,
            srl=rep.loss,
            perceptual=p_val,
            error_rate=rep.error_rate,
            step=taken,
            gate_active=gate,
            grad_norm=float(np.sqrt(np.sum(grad * grad))),
            phi=[int(i) for i in np.flatnonzero(gates)],
            srl_grad_modules=[int(i) for i in np.flatnonzero(srl_nonzero | _mask_from(nudged, code))],
            nudged=nudged,
        ))
        assert x_new.min() >= 0.0 and x_new.max() <= 1.0
        if x_new is x or np.array_equal(x_new, x):
            trace.stop_reason = "stalled"
            break
        moved = True
        prev = (phase, obj)
        x = x_new
    else:
        trace.stop_reason = "max_iters"

    if trace.stop_reason != "error_rate_zero" and cfg.quantize_output and moved:
        x = quantize(x)
    final = srl(x, target, code)
    trace.final_image = x
    trace.iterations = len(trace.records)
    trace.final_error_rate = final.error_rate
    trace.converged = final.error_rate == 0.0
    return x, trace


def _mask_from(indices: list[int], code: CodeConfig) -> np.ndarray:
    out = np.zeros((code.side, code.side), dtype=bool)
    if indices:
        out.ravel()[indices] = True
    return out


@dataclass
class RepairResult:
    image: np.ndarray
    trace: RefineTrace
    target: ModuleMatrix
    match: object
    decoded: bool
    corrections: tuple[int, ...] = ()


def repair(
    x0: np.ndarray,
    payload,
    code: CodeConfig | None = None,
    cfg: RefineConfig | None = None,
) -> RepairResult:
    """Qart-transform the target toward ``x0``, refine, and re-verify with the decoder."""
    code = code or CodeConfig()
    cfg = cfg or RefineConfig()
    x0 = np.asarray(x0, dtype=np.float64)
    check_extent(x0, code)
    pattern = desired_pattern(x0, code)
    target, match = transform(payload, code, pattern)
    image, trace = pgd_refine(x0, target, x0, cfg, code)
    expected = payload.encode("utf-8") if isinstance(payload, str) else bytes(payload)
    try:
        result = decode(image, code)
        decoded = result.payload == expected
        corrections = result.corrections
    except DecodeError:
        decoded, corrections = False, ()
    trace.converged = trace.converged and decoded
    return RepairResult(image, trace, target, match, decoded, corrections)


def blend(photo: np.ndarray, raster: np.ndarray, photo_weight: float = 0.7) -> np.ndarray:
    """``photo_weight * photo + (1 - photo_weight) * raster`` with gray rasters broadcast to RGB."""
    photo = np.asarray(photo, dtype=np.float64)
    raster = np.asarray(raster, dtype=np.float64)
    if photo.ndim == 3 and raster.ndim == 2:
        raster = raster[:, :, None]
    return np.clip(photo_weight * photo + (1.0 - photo_weight) * raster, 0.0, 1.0)

