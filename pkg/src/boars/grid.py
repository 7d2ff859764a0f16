"""Spectral-grid datasets and the simulated instrument.

A spectral grid couples a scalar image (one value per pixel) with a full
spectrum per pixel on a shared bias axis. Grids are loaded from disk,
synthesized, or downsampled, and a simulated instrument serves spectra
at requested pixel locations.
"""

from __future__ import annotations

import csv
import json
import struct
from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import gaussian_filter

from .errors import DegenerateSpectrumError, GridFormatError

_MAGIC = b"BGRD"


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class GridIndex:
    """Pixel location on the grid."""

    row: int
    col: int


@dataclass(frozen=True)
class Spectrum:
    """Per-pixel spectrum with the pixel it came from."""

    values: np.ndarray
    source: GridIndex

    def __post_init__(self):
        object.__setattr__(self, "values", _readonly(np.asarray(self.values, dtype=np.float64)))
        if not np.all(np.isfinite(self.values)):
            raise GridFormatError("spectrum contains non-finite values")


@dataclass(frozen=True)
class Patch:
    """Row-major flattening of a square image window."""

    values: np.ndarray
    anchor: GridIndex
    window: int

    def __post_init__(self):
        object.__setattr__(self, "values", _readonly(np.asarray(self.values, dtype=np.float64)))
        if self.values.shape != (self.window * self.window,):
            raise ValueError("patch values must have length window*window")


@dataclass(frozen=True)
class SpectralGrid:
    """Immutable H x W scalar image plus per-pixel spectra on a shared bias axis."""

    image: np.ndarray
    spectra: np.ndarray
    bias: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        image = np.asarray(self.image, dtype=np.float64)
        spectra = np.asarray(self.spectra, dtype=np.float64)
        bias = np.asarray(self.bias, dtype=np.float64)
        if image.ndim != 2:
            raise GridFormatError("image must be 2-D")
        if spectra.shape != (*image.shape, bias.shape[0]):
            raise GridFormatError(
                f"spectra shape {spectra.shape} does not match image {image.shape} "
                f"and bias length {bias.shape[0]}"
            )
        for name, a in (("image", image), ("spectra", spectra), ("bias", bias)):
            if not np.all(np.isfinite(a)):
                raise GridFormatError(f"{name} contains non-finite values")
        object.__setattr__(self, "image", _readonly(image))
        object.__setattr__(self, "spectra", _readonly(spectra))
        object.__setattr__(self, "bias", _readonly(bias))

    @property
    def height(self) -> int:
        return self.image.shape[0]

    @property
    def width(self) -> int:
        return self.image.shape[1]

    @property
    def spectrum_len(self) -> int:
        return self.bias.shape[0]


def save_dataset(grid: SpectralGrid, path) -> None:
    """Write a grid file: magic, manifest length, JSON manifest, float32 payloads."""
    manifest = json.dumps(
        {
            "height": grid.height,
            "width": grid.width,
            "spectrum_len": grid.spectrum_len,
            "bias": [float(v) for v in grid.bias],
            "meta": grid.meta,
        }
    ).encode("utf-8")
    with open(path, "wb") as f:
        f.write(_MAGIC)
        f.write(struct.pack("<I", len(manifest)))
        f.write(manifest)
        f.write(grid.image.astype("<f4").tobytes())
        f.write(grid.spectra.astype("<f4").tobytes())


def load_dataset(path) -> SpectralGrid:
    """Read and validate a grid file written by :func:`save_dataset`."""
    try:
        with open(path, "rb") as f:
            raw = f.read()
    except OSError as e:
        raise GridFormatError(f"cannot read grid file {path}: {e}") from e
    if len(raw) < 8 or raw[:4] != _MAGIC:
        raise GridFormatError("not a BGRD grid file (bad magic)")
    (mlen,) = struct.unpack("<I", raw[4:8])
    if len(raw) < 8 + mlen:
        raise GridFormatError("truncated manifest")
    try:
        manifest = json.loads(raw[8 : 8 + mlen].decode("utf-8"))
        h, w, l = manifest["height"], manifest["width"], manifest["spectrum_len"]
        bias = np.asarray(manifest["bias"], dtype=np.float64)
        meta = manifest.get("meta", {})
    except (ValueError, KeyError, TypeError) as e:
        raise GridFormatError(f"malformed manifest: {e}") from e
    if bias.shape != (l,):
        raise GridFormatError("manifest bias length does not match spectrum_len")
    payload = np.frombuffer(raw[8 + mlen :], dtype="<f4")
    expected = h * w + h * w * l
    if payload.size != expected:
        raise GridFormatError(f"payload has {payload.size} floats, expected {expected}")
    image = payload[: h * w].reshape(h, w)
    spectra = payload[h * w :].reshape(h, w, l)
    return SpectralGrid(image=image, spectra=spectra, bias=bias, meta=meta)


def load_csv_dataset(spectra_path, image_path, bias=None) -> SpectralGrid:
    """Import a hand-built fixture: spectra CSV (row, col, L values) plus an image CSV.

    When no bias axis is given, sample indices 0..L-1 are used.
    """
    rows = {}
    l = None
    with open(spectra_path, newline="") as f:
        for rec in csv.reader(f):
            if not rec:
                continue
            r, c = int(rec[0]), int(rec[1])
            vals = np.asarray([float(v) for v in rec[2:]])
            if l is None:
                l = vals.size
            elif vals.size != l:
                raise GridFormatError("inconsistent spectrum length across CSV rows")
            rows[(r, c)] = vals
    image = np.loadtxt(image_path, delimiter=",", ndmin=2)
    h, w = image.shape
    if len(rows) != h * w:
        raise GridFormatError(f"spectra CSV has {len(rows)} pixels, image has {h * w}")
    spectra = np.empty((h, w, l))
    for (r, c), vals in rows.items():
        if not (0 <= r < h and 0 <= c < w):
            raise GridFormatError(f"spectra CSV pixel ({r},{c}) outside image")
        spectra[r, c] = vals
    if bias is None:
        bias = np.arange(l, dtype=np.float64)
    return SpectralGrid(image=image, spectra=spectra, bias=np.asarray(bias, dtype=np.float64))


def downsample_grid(grid: SpectralGrid, factor: int) -> SpectralGrid:
    """Reduce resolution by an integer factor: image by block mean, spectra by
    the block's top-left pixel."""
    if factor < 1:
        raise ValueError("factor must be a positive integer")
    if grid.height % factor or grid.width % factor:
        raise ValueError(f"factor {factor} does not divide {grid.height}x{grid.width}")
    h, w = grid.height // factor, grid.width // factor
    image = grid.image.reshape(h, factor, w, factor).mean(axis=(1, 3))
    spectra = grid.spectra[::factor, ::factor, :]
    return SpectralGrid(image=image, spectra=spectra, bias=grid.bias, meta=dict(grid.meta))


def candidate_indices(grid: SpectralGrid, w: int) -> list[GridIndex]:
    """All pixels whose centered w-window fits inside the image, row-major."""
    if w > min(grid.height, grid.width):
        raise ValueError(f"window {w} larger than grid {grid.height}x{grid.width}")
    lo = w // 2
    return [
        GridIndex(r, c)
        for r in range(lo, grid.height - w + 1 + lo)
        for c in range(lo, grid.width - w + 1 + lo)
    ]


def candidate_lattice_shape(grid: SpectralGrid, w: int) -> tuple[int, int]:
    """Dimensions of the candidate lattice (interior band)."""
    return grid.height - w + 1, grid.width - w + 1


def extract_patch(grid: SpectralGrid, idx: GridIndex, w: int) -> Patch:
    """Row-major flattening of the w x w window anchored as centered as possible
    at idx (top-left at row - w//2, col - w//2)."""
    r0, c0 = idx.row - w // 2, idx.col - w // 2
    if not (0 <= r0 and r0 + w <= grid.height and 0 <= c0 and c0 + w <= grid.width):
        raise ValueError(f"index ({idx.row},{idx.col}) has no valid {w}-window")
    return Patch(values=grid.image[r0 : r0 + w, c0 : c0 + w].ravel(), anchor=idx, window=w)


def minmax_normalize(values: np.ndarray) -> np.ndarray:
    """Min-max rescale to [0, 1]; constant input is degenerate."""
    values = np.asarray(values, dtype=np.float64)
    lo, hi = values.min(), values.max()
    if hi == lo:
        raise DegenerateSpectrumError("constant spectrum cannot be normalized")
    return (values - lo) / (hi - lo)


def normalize_spectrum(s: Spectrum) -> Spectrum:
    return Spectrum(values=minmax_normalize(s.values), source=s.source)


class SimulatedInstrument:
    """Table-lookup stand-in for a scanning-probe instrument.

    Acquisitions never mutate the grid; every acquisition is logged with a
    monotonically increasing sequence number. The log is single-writer.
    """

    def __init__(self, grid: SpectralGrid):
        self.grid = grid
        self.log: list[tuple[int, int, int]] = []
        self._seq = 0

    def acquire_spectrum(self, idx: GridIndex) -> Spectrum:
        if not (0 <= idx.row < self.grid.height and 0 <= idx.col < self.grid.width):
            raise ValueError(f"index ({idx.row},{idx.col}) out of range")
        self._seq += 1
        self.log.append((self._seq, idx.row, idx.col))
        return Spectrum(values=self.grid.spectra[idx.row, idx.col, :].copy(), source=idx)


@dataclass(frozen=True)
class SyntheticConfig:
    """Parameters of the synthetic spectral-grid generator.

    Spectra are butterfly-shaped amplitude loops whose positive/negative
    branch mismatch is controlled by a smooth asymmetry field a(r,c) in
    [0,1] (0 = perfectly symmetric). The scalar image tracks a(r,c) with
    strength rho and is otherwise an independent smooth field.
    """

    height: int = 50
    width: int = 50
    spectrum_len: int = 64
    bias_min: float = -4.0
    bias_max: float = 4.0
    rho: float = 0.2
    smoothness: float = 6.0  # gaussian-filter sigma of the spectral fields, px
    image_smoothness: float = 1.5  # sigma of the independent image component
    asym_max: float = 1.0  # upper bound of the asymmetry field
    # Vc range kept narrow: the coercive field is invisible in the image, so
    # its spread sets an irreducible noise floor on any image-driven surrogate
    coercive_frac: tuple[float, float] = (0.42, 0.5)  # Vc as fraction of bias_max
    amp_range: tuple[float, float] = (0.5, 1.0)
    loop_sharpness: float = 0.35  # tanh width as fraction of bias_max


def _smooth_field(rng: np.random.Generator, h: int, w: int, sigma: float) -> np.ndarray:
    """Seeded smooth random field rescaled to [0, 1]."""
    f = gaussian_filter(rng.standard_normal((h, w)), sigma=sigma, mode="reflect")
    lo, hi = f.min(), f.max()
    if hi == lo:  # degenerate only for pathological sizes
        return np.zeros((h, w))
    return (f - lo) / (hi - lo)


def generate_synthetic_grid(config: SyntheticConfig, seed: int) -> SpectralGrid:
    """Deterministic synthetic grid of amplitude hysteresis loops."""
    if config.height < 1 or config.width < 1 or config.spectrum_len < 2:
        raise ValueError("invalid synthetic grid dimensions")
    if config.bias_max <= config.bias_min:
        raise ValueError("bias range must have positive width")
    rng = np.random.default_rng(seed)
    h, w, l = config.height, config.width, config.spectrum_len
    asym = _smooth_field(rng, h, w, config.smoothness) * config.asym_max
    coer = _smooth_field(rng, h, w, config.smoothness)
    amp = _smooth_field(rng, h, w, config.smoothness)
    # The independent image component varies on a shorter spatial scale
    # than the spectral fields, so the asymmetry signal in the image is a
    # smooth trend under higher-frequency clutter.
    indep = _smooth_field(rng, h, w, config.image_smoothness)

    bias = np.linspace(config.bias_min, config.bias_max, l)
    vmax = max(abs(config.bias_min), abs(config.bias_max))
    vc_lo, vc_hi = config.coercive_frac
    vc = (vc_lo + (vc_hi - vc_lo) * coer) * vmax  # (h, w)
    a_lo, a_hi = config.amp_range
    amplitude = a_lo + (a_hi - a_lo) * amp  # (h, w)
    width_v = config.loop_sharpness * vmax

    v = bias[None, None, :]
    vc3 = vc[..., None]
    a3 = asym[..., None]
    amp3 = amplitude[..., None]
    # Positive branch dips to zero at +Vc; negative branch at -Vc*(1 + 0.5a)
    # with its amplitude suppressed by (1 - 0.6a). a=0 gives an exactly
    # mirror-symmetric loop on a symmetric bias axis.
    pos = np.abs(np.tanh((v - vc3) / width_v))
    neg = (1.0 - 0.6 * a3) * np.abs(np.tanh((v + vc3 * (1.0 + 0.5 * a3)) / width_v))
    spectra = amp3 * np.where(v >= 0, pos, neg)

    asym_scaled = asym / config.asym_max if config.asym_max > 0 else asym
    # Regress the asymmetry component out of the independent field so the
    # correlation knob is exact: rho=0 gives zero image/asymmetry correlation.
    ac = asym_scaled - asym_scaled.mean()
    if ac.std() > 0:
        ic = indep - indep.mean()
        indep = indep - (ic * ac).sum() / (ac * ac).sum() * ac
        lo, hi = indep.min(), indep.max()
        indep = (indep - lo) / (hi - lo)
    image = config.rho * asym_scaled + (1.0 - config.rho) * indep
    meta = {"synthetic": True, "seed": seed, "rho": config.rho}
    return SpectralGrid(image=image, spectra=spectra, bias=bias, meta=meta)
