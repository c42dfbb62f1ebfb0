"""From-scratch pixel operations for the artifact-removal and normalization chain.

Image conventions used across the package:

* 8-bit image: ``np.uint8`` array, shape ``(h, w)`` for grayscale or
  ``(h, w, 3)`` for interleaved RGB, row-major.
* normalized image: ``np.float32`` array of the same shape, every sample
  in [0, 1], produced only by :func:`normalize`.
* edge mask: ``bool`` array of shape ``(h, w)``.

Fixed numeric conventions (so independent reimplementations can match
bit-for-bit): rounding is round-half-up, i.e. ``floor(x + 0.5)``; every
windowed operation pads with edge replication; bilinear resampling uses the
pixel-center convention ``src = (dst + 0.5) * (src_dim / out_dim) - 0.5``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy import ndimage


# ---------------------------------------------------------------------------
# shared helpers


def round_half_up(x: np.ndarray) -> np.ndarray:
    return np.floor(x + 0.5)


def _check_image(img: np.ndarray) -> np.ndarray:
    img = np.asarray(img)
    if img.dtype != np.uint8:
        raise ValueError(f"expected uint8 image, got dtype {img.dtype}")
    if img.ndim == 2:
        return img
    if img.ndim == 3 and img.shape[2] == 3:
        return img
    raise ValueError(f"expected (h, w) or (h, w, 3) image, got shape {img.shape}")


def _check_gray(img: np.ndarray) -> np.ndarray:
    img = _check_image(img)
    if img.ndim != 2:
        raise ValueError("expected a single-channel image")
    return img


def _check_odd_kernel(k: int) -> None:
    if k < 3 or k % 2 == 0:
        raise ValueError(f"kernel size must be odd and >= 3, got {k}")


def _per_channel(img: np.ndarray, fn) -> np.ndarray:
    if img.ndim == 2:
        return fn(img)
    return np.stack([fn(img[:, :, c]) for c in range(img.shape[2])], axis=2)


# ---------------------------------------------------------------------------
# point operations


def to_gray(img: np.ndarray) -> np.ndarray:
    """Luminance grayscale: round_half_up(0.299 R + 0.587 G + 0.114 B)."""
    img = _check_image(img)
    if img.ndim == 2:
        return img.copy()
    lum = (
        0.299 * img[:, :, 0].astype(np.float64)
        + 0.587 * img[:, :, 1]
        + 0.114 * img[:, :, 2]
    )
    return round_half_up(lum).astype(np.uint8)


def normalize(img: np.ndarray) -> np.ndarray:
    """Scale 8-bit samples to [0, 1] as float32 (p / 255 exactly)."""
    img = _check_image(img)
    return (img.astype(np.float32) / np.float32(255.0)).astype(np.float32)


def adjust_brightness_contrast(img: np.ndarray, alpha: float, beta: float) -> np.ndarray:
    """Affine intensity map: clamp(round_half_up(alpha * p + beta), 0, 255)."""
    img = _check_image(img)
    if alpha < 0:
        raise ValueError(f"alpha must be >= 0, got {alpha}")
    lut = np.clip(round_half_up(alpha * np.arange(256, dtype=np.float64) + beta), 0, 255)
    return lut.astype(np.uint8)[img]


def gamma_correct(img: np.ndarray, gamma: float) -> np.ndarray:
    """Power-law intensity map: round_half_up(255 * (p / 255) ** gamma)."""
    img = _check_image(img)
    if gamma <= 0:
        raise ValueError(f"gamma must be > 0, got {gamma}")
    lut = round_half_up(255.0 * (np.arange(256, dtype=np.float64) / 255.0) ** gamma)
    return np.clip(lut, 0, 255).astype(np.uint8)[img]


# ---------------------------------------------------------------------------
# geometry


def central_crop(img: np.ndarray, fraction: float) -> np.ndarray:
    """Keep the centered window of size floor(dim * fraction) per axis."""
    img = _check_image(img)
    if not 0.0 < fraction <= 1.0:
        raise ValueError(f"crop fraction must be in (0, 1], got {fraction}")
    h, w = img.shape[:2]
    out_w = math.floor(w * fraction)
    out_h = math.floor(h * fraction)
    if out_w < 1 or out_h < 1:
        raise ValueError(f"crop fraction {fraction} leaves no pixels on a {w}x{h} image")
    x0 = (w - out_w) // 2
    y0 = (h - out_h) // 2
    return img[y0 : y0 + out_h, x0 : x0 + out_w].copy()


def _source_coords(out_dim: int, src_dim: int) -> np.ndarray:
    scale = src_dim / out_dim
    coords = (np.arange(out_dim, dtype=np.float64) + 0.5) * scale - 0.5
    return np.clip(coords, 0.0, src_dim - 1)


def resize_bilinear(img: np.ndarray, out_w: int, out_h: int) -> np.ndarray:
    """Bilinear resize under the pixel-center convention, edge-clamped."""
    img = _check_image(img)
    if out_w < 1 or out_h < 1:
        raise ValueError("output dimensions must be >= 1")
    h, w = img.shape[:2]
    xs = _source_coords(out_w, w)
    ys = _source_coords(out_h, h)
    x0 = np.floor(xs).astype(np.int64)
    y0 = np.floor(ys).astype(np.int64)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = xs - x0
    fy = ys - y0

    def one(ch: np.ndarray) -> np.ndarray:
        ch = ch.astype(np.float64)
        top = ch[y0[:, None], x0[None, :]] * (1 - fx)[None, :] + ch[y0[:, None], x1[None, :]] * fx[None, :]
        bot = ch[y1[:, None], x0[None, :]] * (1 - fx)[None, :] + ch[y1[:, None], x1[None, :]] * fx[None, :]
        vals = top * (1 - fy)[:, None] + bot * fy[:, None]
        return np.clip(round_half_up(vals), 0, 255).astype(np.uint8)

    return _per_channel(img, one)


def _sample_bilinear_black(ch: np.ndarray, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Bilinear sample at float coords; out-of-bounds neighbors contribute 0."""
    h, w = ch.shape
    x0 = np.floor(xs).astype(np.int64)
    y0 = np.floor(ys).astype(np.int64)
    fx = xs - x0
    fy = ys - y0
    acc = np.zeros(xs.shape, dtype=np.float64)
    chf = ch.astype(np.float64)
    for dy, wy in ((0, 1 - fy), (1, fy)):
        yy = y0 + dy
        iny = (yy >= 0) & (yy < h)
        for dx, wx in ((0, 1 - fx), (1, fx)):
            xx = x0 + dx
            valid = iny & (xx >= 0) & (xx < w)
            vals = np.zeros_like(acc)
            vals[valid] = chf[yy[valid], xx[valid]]
            acc += wy * wx * vals
    return acc


_EXACT_TRIG = {0: (1.0, 0.0), 90: (0.0, 1.0), 180: (-1.0, 0.0), 270: (0.0, -1.0)}


def rotate_bilinear(img: np.ndarray, degrees: float) -> np.ndarray:
    """Rotate about the image center; bilinear resampling, black fill.

    Multiples of 90 degrees use exact trig values so axis-aligned rotations
    are pixel-exact.
    """
    img = _check_image(img)
    deg = degrees % 360.0
    if deg in _EXACT_TRIG:
        cos_t, sin_t = _EXACT_TRIG[deg]
    else:
        theta = math.radians(deg)
        cos_t, sin_t = math.cos(theta), math.sin(theta)
    if cos_t == 1.0 and sin_t == 0.0:
        return img.copy()
    h, w = img.shape[:2]
    cx, cy = (w - 1) / 2.0, (h - 1) / 2.0
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    dx = xx - cx
    dy = yy - cy
    # inverse map: rotate destination coords by -theta
    xs = cx + cos_t * dx + sin_t * dy
    ys = cy - sin_t * dx + cos_t * dy
    out = _per_channel(img, lambda ch: _sample_bilinear_black(ch, xs, ys))
    return np.clip(round_half_up(out), 0, 255).astype(np.uint8)


def zoom_bilinear(img: np.ndarray, scale: float) -> np.ndarray:
    """Zoom about the image center keeping the frame size; black fill when
    zooming out. scale > 1 magnifies."""
    img = _check_image(img)
    if scale <= 0:
        raise ValueError(f"zoom scale must be > 0, got {scale}")
    if scale == 1.0:
        return img.copy()
    h, w = img.shape[:2]
    cx, cy = (w - 1) / 2.0, (h - 1) / 2.0
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    xs = cx + (xx - cx) / scale
    ys = cy + (yy - cy) / scale
    out = _per_channel(img, lambda ch: _sample_bilinear_black(ch, xs, ys))
    return np.clip(round_half_up(out), 0, 255).astype(np.uint8)


# ---------------------------------------------------------------------------
# CLAHE


def _tile_edges(dim: int, n: int) -> list[int]:
    return [dim * i // n for i in range(n + 1)]


def _clip_histogram(hist: np.ndarray, clip_limit: float, tile_pixels: int) -> np.ndarray:
    if math.isinf(clip_limit):
        return hist
    threshold = max(1, math.floor(clip_limit * tile_pixels / 256.0))
    excess = int(np.maximum(hist - threshold, 0).sum())
    clipped = np.minimum(hist, threshold)
    clipped += excess // 256
    clipped[: excess % 256] += 1
    return clipped


def _equalization_lut(hist: np.ndarray, tile_pixels: int) -> np.ndarray:
    cdf = np.cumsum(hist, dtype=np.float64)
    return np.clip(round_half_up(cdf * 255.0 / tile_pixels), 0, 255)


def _axis_interp(coords: np.ndarray, centers: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Left tile index and blend weight for each coordinate, clamped at edges."""
    n = len(centers)
    if n == 1:
        return np.zeros(len(coords), dtype=np.int64), np.zeros(len(coords))
    idx = np.clip(np.searchsorted(centers, coords, side="right") - 1, 0, n - 2)
    t = (coords - centers[idx]) / (centers[idx + 1] - centers[idx])
    return idx, np.clip(t, 0.0, 1.0)


def clahe(img: np.ndarray, clip_limit: float = 2.0, tiles: tuple[int, int] = (8, 8)) -> np.ndarray:
    """Contrast-limited adaptive histogram equalization on a grayscale image.

    Per-tile 256-bin histograms are clipped at ``clip_limit * tile_pixels / 256``
    (floored, never below 1 count); the excess is redistributed uniformly, the
    integer remainder going one count each to the lowest bins. Each tile's
    equalization map is ``round_half_up(cdf * 255 / tile_pixels)`` and output
    pixels blend the four surrounding tile maps bilinearly between tile
    centers, clamping outside the outermost centers.
    """
    img = _check_gray(img)
    tx, ty = tiles
    if tx < 1 or ty < 1:
        raise ValueError(f"tile grid must be >= 1 per axis, got {tiles}")
    h, w = img.shape
    if tx > w or ty > h:
        raise ValueError(f"tile grid {tiles} larger than image {w}x{h}")
    if not math.isinf(clip_limit) and clip_limit < 1.0:
        raise ValueError(f"clip limit must be >= 1, got {clip_limit}")

    xe = _tile_edges(w, tx)
    ye = _tile_edges(h, ty)
    luts = np.zeros((ty, tx, 256), dtype=np.float64)
    for j in range(ty):
        for i in range(tx):
            tile = img[ye[j] : ye[j + 1], xe[i] : xe[i + 1]]
            hist = np.bincount(tile.ravel(), minlength=256)
            hist = _clip_histogram(hist, clip_limit, tile.size)
            luts[j, i] = _equalization_lut(hist, tile.size)

    cx = np.array([(xe[i] + xe[i + 1] - 1) / 2.0 for i in range(tx)])
    cy = np.array([(ye[j] + ye[j + 1] - 1) / 2.0 for j in range(ty)])
    ix, fx = _axis_interp(np.arange(w, dtype=np.float64), cx)
    iy, fy = _axis_interp(np.arange(h, dtype=np.float64), cy)

    i0 = ix[None, :].repeat(h, axis=0)
    i1 = np.minimum(i0 + 1, tx - 1)
    j0 = iy[:, None].repeat(w, axis=1)
    j1 = np.minimum(j0 + 1, ty - 1)
    u = fx[None, :]
    v = fy[:, None]
    out = (
        luts[j0, i0, img] * (1 - u) * (1 - v)
        + luts[j0, i1, img] * u * (1 - v)
        + luts[j1, i0, img] * (1 - u) * v
        + luts[j1, i1, img] * u * v
    )
    return np.clip(round_half_up(out), 0, 255).astype(np.uint8)


# ---------------------------------------------------------------------------
# windowed filters


def _windows(ch: np.ndarray, k: int) -> np.ndarray:
    pad = k // 2
    padded = np.pad(ch, pad, mode="edge")
    return sliding_window_view(padded, (k, k))


def median_blur(img: np.ndarray, k: int) -> np.ndarray:
    """Median of the k x k neighborhood, replicate borders, per channel."""
    img = _check_image(img)
    _check_odd_kernel(k)

    def one(ch: np.ndarray) -> np.ndarray:
        win = _windows(ch, k).reshape(ch.shape[0], ch.shape[1], k * k)
        return np.sort(win, axis=2)[:, :, k * k // 2]

    return _per_channel(img, one)


def erode(img: np.ndarray, k: int) -> np.ndarray:
    """Grayscale erosion with a k x k square structuring element."""
    img = _check_image(img)
    _check_odd_kernel(k)
    return _per_channel(img, lambda ch: _windows(ch, k).min(axis=(2, 3)))


def dilate(img: np.ndarray, k: int) -> np.ndarray:
    """Grayscale dilation with a k x k square structuring element."""
    img = _check_image(img)
    _check_odd_kernel(k)
    return _per_channel(img, lambda ch: _windows(ch, k).max(axis=(2, 3)))


def morph_open(img: np.ndarray, k: int) -> np.ndarray:
    """Erosion followed by dilation; removes small bright artifacts."""
    return dilate(erode(img, k), k)


def morph_close(img: np.ndarray, k: int) -> np.ndarray:
    """Dilation followed by erosion; fills small dark gaps."""
    return erode(dilate(img, k), k)


# ---------------------------------------------------------------------------
# Canny


def gaussian_kernel5(sigma: float = 1.4) -> np.ndarray:
    ax = np.arange(-2, 3, dtype=np.float64)
    g = np.exp(-(ax[:, None] ** 2 + ax[None, :] ** 2) / (2.0 * sigma * sigma))
    return g / g.sum()


def _convolve_replicate(ch: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    k = kernel.shape[0]
    pad = k // 2
    padded = np.pad(ch.astype(np.float64), pad, mode="edge")
    out = np.zeros_like(ch, dtype=np.float64)
    h, w = ch.shape
    for dy in range(k):
        for dx in range(k):
            weight = kernel[dy, dx]
            if weight != 0.0:
                out += weight * padded[dy : dy + h, dx : dx + w]
    return out


_SOBEL_X = np.array([[-1, 0, 1], [-2, 0, 2], [-1, 0, 1]], dtype=np.float64)
_SOBEL_Y = np.array([[-1, -2, -1], [0, 0, 0], [1, 2, 1]], dtype=np.float64)

# canonical forward offsets (dy, dx) per quantized gradient direction
_NMS_OFFSETS = {0: (0, 1), 45: (1, 1), 90: (1, 0), 135: (1, -1)}


def _quantize_direction(angle_deg: np.ndarray) -> np.ndarray:
    a = np.mod(angle_deg, 180.0)
    q = np.full(a.shape, 0, dtype=np.int64)
    q[(a >= 22.5) & (a < 67.5)] = 45
    q[(a >= 67.5) & (a < 112.5)] = 90
    q[(a >= 112.5) & (a < 157.5)] = 135
    return q


def _shifted(padded: np.ndarray, dy: int, dx: int, h: int, w: int) -> np.ndarray:
    return padded[1 + dy : 1 + dy + h, 1 + dx : 1 + dx + w]


def canny(img: np.ndarray, low: float, high: float) -> np.ndarray:
    """Canny edge mask: 5x5 Gaussian (sigma 1.4), Sobel gradients, 4-direction
    non-maximum suppression, double threshold, 8-connected hysteresis.

    The NMS keep rule is ``mag >= forward and mag > backward`` along the
    quantized gradient direction (forward offsets per _NMS_OFFSETS), which
    keeps exactly one pixel of a two-pixel plateau. Out-of-image neighbors
    count as zero magnitude.
    """
    img = _check_gray(img)
    if low < 0 or low > high:
        raise ValueError(f"thresholds must satisfy 0 <= low <= high, got {low}, {high}")
    h, w = img.shape
    smoothed = _convolve_replicate(img, gaussian_kernel5())
    gx = _convolve_replicate(smoothed, _SOBEL_X)
    gy = _convolve_replicate(smoothed, _SOBEL_Y)
    mag = np.hypot(gx, gy)
    direction = _quantize_direction(np.degrees(np.arctan2(gy, gx)))

    padded = np.pad(mag, 1, mode="constant", constant_values=0.0)
    keep = np.zeros((h, w), dtype=bool)
    for d, (dy, dx) in _NMS_OFFSETS.items():
        sel = direction == d
        fwd = _shifted(padded, dy, dx, h, w)
        bwd = _shifted(padded, -dy, -dx, h, w)
        keep |= sel & (mag >= fwd) & (mag > bwd)

    strong = keep & (mag >= high)
    weak = keep & (mag >= low)

    # hysteresis: grow strong pixels through weak ones, 8-connected
    frontier = strong.copy()
    while True:
        grown = np.zeros_like(frontier)
        p = np.pad(frontier, 1, mode="constant", constant_values=False)
        for dy in (-1, 0, 1):
            for dx in (-1, 0, 1):
                if dy == 0 and dx == 0:
                    continue
                grown |= _shifted(p, dy, dx, h, w)
        new = grown & weak & ~frontier
        if not new.any():
            break
        frontier |= new
    return frontier


# ---------------------------------------------------------------------------
# composite artifact removal


@dataclass(frozen=True)
class ArtifactRemovalParams:
    """Stage toggles and parameters for :func:`remove_instrument_artifacts`.

    Defaults are the standard values these algorithms ship with in mainstream
    imaging tools; every stage can be disabled independently.
    """

    crop_fraction: float = 0.8
    clahe_enabled: bool = True
    clahe_clip_limit: float = 2.0
    clahe_tiles: tuple[int, int] = (8, 8)
    median_enabled: bool = True
    median_kernel: int = 5
    edge_inpaint_enabled: bool = True
    canny_low: float = 50.0
    canny_high: float = 150.0
    border_band_fraction: float = 0.1
    mask_dilate_kernel: int = 5
    morphology_enabled: bool = True
    morphology_kernel: int = 3


def _clahe_color(img: np.ndarray, clip_limit: float, tiles: tuple[int, int]) -> np.ndarray:
    """CLAHE via luminance: equalize L, then scale each channel by newL / oldL."""
    if img.ndim == 2:
        return clahe(img, clip_limit, tiles)
    lum = to_gray(img)
    new_lum = clahe(lum, clip_limit, tiles)
    gain = new_lum.astype(np.float64) / np.maximum(lum.astype(np.float64), 1.0)
    out = round_half_up(img.astype(np.float64) * gain[:, :, None])
    return np.clip(out, 0, 255).astype(np.uint8)


def _border_band(h: int, w: int, fraction: float) -> np.ndarray:
    bw = max(1, math.floor(w * fraction + 0.5))
    bh = max(1, math.floor(h * fraction + 0.5))
    band = np.zeros((h, w), dtype=bool)
    band[:bh, :] = True
    band[h - bh :, :] = True
    band[:, :bw] = True
    band[:, w - bw :] = True
    return band


def _dilate_mask(mask: np.ndarray, k: int) -> np.ndarray:
    pad = k // 2
    padded = np.pad(mask, pad, mode="edge")
    return sliding_window_view(padded, (k, k)).any(axis=(2, 3))


def _inpaint_nearest(img: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Replace masked pixels with the nearest unmasked pixel (Euclidean)."""
    if not mask.any() or mask.all():
        return img.copy()
    iy, ix = ndimage.distance_transform_edt(mask, return_distances=False, return_indices=True)
    out = img.copy()
    if img.ndim == 2:
        out[mask] = img[iy[mask], ix[mask]]
    else:
        out[mask] = img[iy[mask], ix[mask], :]
    return out


def remove_instrument_artifacts(img: np.ndarray, params: ArtifactRemovalParams) -> np.ndarray:
    """Composite border-artifact removal.

    Fixed stage order: central crop, luminance CLAHE, median blur, Canny over
    the outer border band, mask dilation, inpaint-by-nearest-interior, then
    morphological open and close. Deterministic for fixed params.
    """
    img = _check_image(img)
    out = central_crop(img, params.crop_fraction)
    if params.clahe_enabled:
        out = _clahe_color(out, params.clahe_clip_limit, params.clahe_tiles)
    if params.median_enabled:
        out = median_blur(out, params.median_kernel)
    if params.edge_inpaint_enabled:
        gray = to_gray(out)
        edges = canny(gray, params.canny_low, params.canny_high)
        band = _border_band(*gray.shape, params.border_band_fraction)
        mask = _dilate_mask(edges & band, params.mask_dilate_kernel)
        out = _inpaint_nearest(out, mask)
    if params.morphology_enabled:
        out = morph_close(morph_open(out, params.morphology_kernel), params.morphology_kernel)
    return out
