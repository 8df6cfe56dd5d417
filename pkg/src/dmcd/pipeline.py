"""Experiment plumbing around the solver.

Image ingestion and emission, blur-kernel synthesis, noise injection,
flat key=value config files, and the end-to-end experiment driver that
turns a ground-truth image into component images plus a metrics report.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np
from PIL import Image, UnidentifiedImageError

from .diffops import DirectionBank
from .frames import build_multiscale, export_spectra
from .grid import circular_convolve
from .metrics import MetricsReport, mec, mse, qq_export, sparsity
from .solver import SolverParams, demix

__all__ = [
    "ExperimentConfig",
    "make_blur_kernel",
    "add_noise",
    "load_image",
    "save_image",
    "parse_kernel_spec",
    "parse_config",
    "parse_config_text",
    "run_experiment",
]

KERNEL_KINDS = ("gaussian", "disk", "delta")
SAVE_MODES = ("clamp", "rescale", "offset-150")


# =====================================================================
# Kernel synthesis and noise
# =====================================================================


def _embed_centered(weights: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
    """Place an odd-support stencil on the lattice with its center at 0."""
    k1, k2 = weights.shape
    d1, d2 = shape
    if k1 > d1 or k2 > d2:
        raise ValueError(
            f"kernel support {weights.shape} exceeds lattice {shape}"
        )
    h = np.zeros(shape)
    for a in range(k1):
        for b in range(k2):
            h[(a - k1 // 2) % d1, (b - k2 // 2) % d2] += weights[a, b]
    return h


def make_blur_kernel(
    kind: str,
    l_blur: float,
    shape: tuple[int, int],
    sigma: float | None = None,
) -> np.ndarray:
    """Synthesize a normalized blur kernel centered at lattice index 0.

    kind "gaussian": square support of l_blur sites (widened by one when
    even, keeping the stencil symmetric) with std ``sigma`` defaulting to
    l_blur/6 so the support covers three stds each way. kind "disk":
    indicator of radius l_blur/2. kind "delta": identity kernel. All
    kinds are normalized to unit sum, pinning the DC spectrum to one.
    """
    if kind not in KERNEL_KINDS:
        raise ValueError(f"unknown kernel kind {kind!r}; choose from {KERNEL_KINDS}")
    if not l_blur >= 1:
        raise ValueError(f"l_blur must be >= 1, got {l_blur}")
    d1, d2 = shape
    if d1 < 1 or d2 < 1:
        raise ValueError(f"invalid lattice {shape}")

    if kind == "delta":
        h = np.zeros(shape)
        h[0, 0] = 1.0
        return h

    if kind == "gaussian":
        support = int(round(l_blur))
        if support % 2 == 0:
            support += 1
        if sigma is None:
            sigma = l_blur / 6.0
        if not sigma > 0:
            raise ValueError(f"sigma must be positive, got {sigma}")
        offsets = np.arange(support) - support // 2
        profile = np.exp(-(offsets.astype(float) ** 2) / (2.0 * sigma**2))
        weights = np.outer(profile, profile)
    else:  # disk
        radius = l_blur / 2.0
        reach = int(np.floor(radius))
        offsets = np.arange(-reach, reach + 1)
        di, dj = np.meshgrid(offsets, offsets, indexing="ij")
        weights = (di**2 + dj**2 <= radius**2).astype(float)

    h = _embed_centered(weights, shape)
    return h / h.sum()


def add_noise(f: np.ndarray, sigma: float, seed: int = 0) -> np.ndarray:
    """Add iid zero-mean Gaussian noise, deterministic under the seed."""
    f = np.asarray(f, dtype=float)
    if f.ndim != 2:
        raise ValueError(f"image must be 2-d, got shape {f.shape}")
    if sigma < 0:
        raise ValueError(f"sigma must be nonnegative, got {sigma}")
    rng = np.random.default_rng(seed)
    return f + rng.normal(0.0, sigma, size=f.shape)


# =====================================================================
# Image files
# =====================================================================


def load_image(path: str) -> np.ndarray:
    """Read a grayscale image as float values in [0, 255]."""
    try:
        with Image.open(path) as img:
            return np.asarray(img.convert("L"), dtype=float)
    except UnidentifiedImageError as exc:
        raise ValueError(f"unsupported image format: {path!r}") from exc


def save_image(img: np.ndarray, path: str, mode: str = "clamp") -> str:
    """Write an image as 8-bit grayscale; returns the path.

    Modes: "clamp" rounds and clips to [0, 255]; "rescale" maps the value
    range linearly onto [0, 255] (a constant image becomes mid-gray 128);
    "offset-150" shifts by +150 before clamping, which centers signed
    component images around visible gray.
    """
    img = np.asarray(img, dtype=float)
    if img.ndim != 2:
        raise ValueError(f"image must be 2-d, got shape {img.shape}")
    if not np.all(np.isfinite(img)):
        raise ValueError("image contains non-finite values")
    if mode not in SAVE_MODES:
        raise ValueError(f"unknown save mode {mode!r}; choose from {SAVE_MODES}")

    if mode == "rescale":
        lo, hi = float(img.min()), float(img.max())
        if hi == lo:
            scaled = np.full(img.shape, 128.0)
        else:
            scaled = (img - lo) / (hi - lo) * 255.0
    elif mode == "offset-150":
        scaled = img + 150.0
    else:
        scaled = img

    data = np.clip(np.rint(scaled), 0, 255).astype(np.uint8)
    Image.fromarray(data, mode="L").save(path)
    return path


# =====================================================================
# Configuration
# =====================================================================

_SOLVER_INT_KEYS = ("L", "S", "max_iters", "cst_scales", "cst_directions")
_SOLVER_FLOAT_KEYS = (
    "beta1", "beta2", "beta3", "beta4", "beta5", "beta6", "beta7",
    "alpha", "tol", "cst_dilation", "cst_c",
)
_ADAPTIVE_KEYS = {
    "mu1": "adaptive_mu1",
    "mu2": "adaptive_mu2",
    "nu_rho": "adaptive_nu_rho",
    "nu_eps": "adaptive_nu_eps",
}
_EMIT_KEYS = ("emit_components", "emit_spectra", "emit_metrics", "emit_checkpoints")

_TRUE_WORDS = {"true", "1", "yes", "on"}
_FALSE_WORDS = {"false", "0", "no", "off"}


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything one demixing run needs, resolvable from a config file."""

    input_path: str
    output_dir: str
    kernel_kind: str = "gaussian"
    l_blur: float = 20.0
    kernel_sigma: float | None = None
    noise_sigma: float = 0.0
    seed: int = 0
    solver: SolverParams = field(default_factory=SolverParams)
    emit_components: bool = True
    emit_spectra: bool = False
    emit_metrics: bool = True
    emit_checkpoints: bool = False
    checkpoint_every: int = 25

    def __post_init__(self) -> None:
        if not self.input_path:
            raise ValueError("input_path must be nonempty")
        if not self.output_dir:
            raise ValueError("output_dir must be nonempty")
        if self.kernel_kind not in KERNEL_KINDS:
            raise ValueError(f"unknown kernel kind {self.kernel_kind!r}")
        if not self.l_blur >= 1:
            raise ValueError(f"l_blur must be >= 1, got {self.l_blur}")
        if self.noise_sigma < 0:
            raise ValueError(f"noise_sigma must be nonnegative, got {self.noise_sigma}")
        if self.checkpoint_every < 1:
            raise ValueError("checkpoint_every must be >= 1")


def parse_kernel_spec(text: str) -> tuple[str, float]:
    """Split a KIND:L_BLUR token such as "gaussian:20" or "delta:1"."""
    kind, sep, size = text.partition(":")
    if not sep:
        raise ValueError(f"kernel argument {text!r} must look like KIND:L_BLUR")
    if kind not in KERNEL_KINDS:
        raise ValueError(f"unknown kernel kind {kind!r}; choose from {KERNEL_KINDS}")
    try:
        l_blur = float(size)
    except ValueError:
        raise ValueError(f"kernel argument {text!r} has a non-numeric size") from None
    return kind, l_blur


def _parse_bool(value: str, key: str) -> bool:
    word = value.strip().lower()
    if word in _TRUE_WORDS:
        return True
    if word in _FALSE_WORDS:
        return False
    raise ValueError(f"config key {key!r} expects a boolean, got {value!r}")


def _parse_float(value: str, key: str) -> float:
    try:
        return float(value)
    except ValueError:
        raise ValueError(
            f"bad config value: key {key!r} expects a number, got {value!r}"
        ) from None


def _parse_int(value: str, key: str) -> int:
    try:
        return int(value)
    except ValueError:
        raise ValueError(
            f"bad config value: key {key!r} expects an integer, got {value!r}"
        ) from None


def _parse_threshold(value: str, key: str, solver_kwargs: dict) -> None:
    """A threshold key either carries a number or adaptive:FRACTION."""
    if value.startswith("adaptive:"):
        frac = value[len("adaptive:"):]
        try:
            solver_kwargs[_ADAPTIVE_KEYS[key]] = float(frac)
        except ValueError:
            raise ValueError(
                f"config key {key!r}: bad adaptive fraction {frac!r}"
            ) from None
    else:
        solver_kwargs[key] = _parse_float(value, key)


def parse_config_text(text: str) -> ExperimentConfig:
    """Parse flat key=value lines into a run configuration.

    Blank lines and #-comments are skipped; keys may appear once.  The
    threshold keys mu1, mu2, nu_rho, nu_eps also accept the form
    adaptive:FRACTION, switching that threshold to a per-iteration
    fraction of the relevant sup norm.
    """
    entries: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ValueError(f"line {lineno}: expected key=value, got {raw!r}")
        key, value = key.strip(), value.strip()
        if key in entries:
            raise ValueError(f"line {lineno}: duplicate key {key!r}")
        entries[key] = value

    config_kwargs: dict = {}
    solver_kwargs: dict = {}
    for key, value in entries.items():
        if key == "input":
            config_kwargs["input_path"] = value
        elif key == "output":
            config_kwargs["output_dir"] = value
        elif key == "kernel":
            kind, l_blur = parse_kernel_spec(value)
            config_kwargs["kernel_kind"] = kind
            config_kwargs["l_blur"] = l_blur
        elif key == "kernel_sigma":
            config_kwargs["kernel_sigma"] = _parse_float(value, key)
        elif key == "noise_sigma":
            config_kwargs["noise_sigma"] = _parse_float(value, key)
        elif key == "seed":
            config_kwargs["seed"] = _parse_int(value, key)
        elif key == "checkpoint_every":
            config_kwargs["checkpoint_every"] = _parse_int(value, key)
        elif key in _EMIT_KEYS:
            config_kwargs[key] = _parse_bool(value, key)
        elif key == "beta":
            for i in range(1, 8):
                solver_kwargs[f"beta{i}"] = _parse_float(value, key)
        elif key in _ADAPTIVE_KEYS:
            _parse_threshold(value, key, solver_kwargs)
        elif key in _SOLVER_INT_KEYS:
            solver_kwargs[key] = _parse_int(value, key)
        elif key in _SOLVER_FLOAT_KEYS:
            solver_kwargs[key] = _parse_float(value, key)
        else:
            raise ValueError(f"unknown config key {key!r}")

    if "input_path" not in config_kwargs:
        raise ValueError("config is missing required key 'input'")
    if "output_dir" not in config_kwargs:
        raise ValueError("config is missing required key 'output'")
    return ExperimentConfig(solver=SolverParams(**solver_kwargs), **config_kwargs)


def parse_config(path: str) -> ExperimentConfig:
    """Read and parse a config file; see parse_config_text for grammar."""
    with open(path) as fh:
        return parse_config_text(fh.read())


# =====================================================================
# Experiment driver
# =====================================================================


def run_experiment(config: ExperimentConfig, callback=None) -> MetricsReport:
    """Blur, add noise, demix, and emit artifacts per the config.

    Returns the metrics report comparing the reconstruction against the
    ground-truth input.  Any failure removes artifacts already written to
    the output directory before re-raising.
    """
    f0 = load_image(config.input_path)
    h = make_blur_kernel(
        config.kernel_kind, config.l_blur, f0.shape, sigma=config.kernel_sigma
    )
    f = circular_convolve(f0, h)
    if config.noise_sigma > 0:
        f = add_noise(f, config.noise_sigma, config.seed)

    os.makedirs(config.output_dir, exist_ok=True)
    written: list[str] = []

    def target(name: str) -> str:
        path = os.path.join(config.output_dir, name)
        written.append(path)
        return path

    try:
        checkpoint_path = None
        if config.emit_checkpoints:
            checkpoint_path = target("checkpoint.npz")
        result = demix(
            f,
            h,
            config.solver,
            callback=callback,
            checkpoint_path=checkpoint_path,
            checkpoint_every=config.checkpoint_every,
        )

        if config.emit_components:
            save_image(f, target("f.png"), mode="clamp")
            save_image(result.u, target("u.png"), mode="clamp")
            save_image(result.f_re, target("f_re.png"), mode="clamp")
            for name, component in (("v", result.v), ("rho", result.rho),
                                    ("eps", result.eps)):
                save_image(component, target(f"{name}.png"), mode="offset-150")

        report = MetricsReport(
            mse=mse(f0, result.f_re),
            mec=mec(f0 - result.f_re),
            sparsity_percent=sparsity(result.v),
            err_v_history=result.err_v_history,
            constraint_residual=result.constraint_residual,
        )

        if config.emit_metrics:
            report.write_json(target("metrics.json"))
            report.write_history_csv(target("err_v.csv"))
            qq_export(result.eps, target("qq.csv"))
        if config.emit_spectra:
            frames = build_multiscale(
                DirectionBank(config.solver.cst_directions),
                f0.shape,
                scales=config.solver.cst_scales,
                dilation=config.solver.cst_dilation,
                c=config.solver.cst_c,
            )
            written.extend(
                export_spectra(frames, config.output_dir, prefix="cst")
            )
        return report
    except Exception:
        for path in written:
            if os.path.exists(path):
                os.unlink(path)
        raise
