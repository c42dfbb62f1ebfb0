"""Naive reference implementations used to cross-check the vectorized ops.

Everything here is written as plain per-pixel loops straight from the
documented conventions (round-half-up, replicate borders, tile edges at
dim*i//n, and so on). Slow on purpose; kept free of the tricks the real
implementations use so a bug has nowhere to hide in common code.
"""

import numpy as np


def _clamp(v, lo, hi):
    return lo if v < lo else hi if v > hi else v


def _window_values(ch, y, x, k):
    h, w = ch.shape
    pad = k // 2
    vals = []
    for dy in range(-pad, pad + 1):
        for dx in range(-pad, pad + 1):
            yy = _clamp(y + dy, 0, h - 1)
            xx = _clamp(x + dx, 0, w - 1)
            vals.append(ch[yy, xx])
    return vals


def _per_channel(img, fn):
    if img.ndim == 2:
        return fn(img)
    return np.stack([fn(img[:, :, c]) for c in range(img.shape[2])], axis=2)


def median_oracle(img, k):
    def one(ch):
        out = np.zeros_like(ch)
        for y in range(ch.shape[0]):
            for x in range(ch.shape[1]):
                vals = sorted(_window_values(ch, y, x, k))
                out[y, x] = vals[len(vals) // 2]
        return out

    return _per_channel(img, one)


def erode_oracle(img, k):
    def one(ch):
        out = np.zeros_like(ch)
        for y in range(ch.shape[0]):
            for x in range(ch.shape[1]):
                out[y, x] = min(_window_values(ch, y, x, k))
        return out

    return _per_channel(img, one)


def dilate_oracle(img, k):
    def one(ch):
        out = np.zeros_like(ch)
        for y in range(ch.shape[0]):
            for x in range(ch.shape[1]):
                out[y, x] = max(_window_values(ch, y, x, k))
        return out

    return _per_channel(img, one)


def open_oracle(img, k):
    return dilate_oracle(erode_oracle(img, k), k)


def close_oracle(img, k):
    return erode_oracle(dilate_oracle(img, k), k)


def clahe_oracle(img, clip_limit, tiles):
    tx, ty = tiles
    h, w = img.shape
    xe = [w * i // tx for i in range(tx + 1)]
    ye = [h * j // ty for j in range(ty + 1)]

    luts = []
    for j in range(ty):
        row = []
        for i in range(tx):
            hist = [0] * 256
            for y in range(ye[j], ye[j + 1]):
                for x in range(xe[i], xe[i + 1]):
                    hist[img[y, x]] += 1
            size = (ye[j + 1] - ye[j]) * (xe[i + 1] - xe[i])
            if np.isfinite(clip_limit):
                threshold = max(1, int(np.floor(clip_limit * size / 256.0)))
                excess = sum(max(0, c - threshold) for c in hist)
                hist = [min(c, threshold) for c in hist]
                hist = [c + excess // 256 for c in hist]
                for b in range(excess % 256):
                    hist[b] += 1
            lut = []
            running = 0
            for b in range(256):
                running += hist[b]
                lut.append(_clamp(np.floor(running * 255.0 / size + 0.5), 0.0, 255.0))
            row.append(lut)
        luts.append(row)

    cxs = [(xe[i] + xe[i + 1] - 1) / 2.0 for i in range(tx)]
    cys = [(ye[j] + ye[j + 1] - 1) / 2.0 for j in range(ty)]

    def axis_pos(coord, centers):
        n = len(centers)
        if n == 1 or coord <= centers[0]:
            return 0, 0.0
        if coord >= centers[-1]:
            return n - 2, 1.0
        i = 0
        while not (centers[i] <= coord < centers[i + 1]):
            i += 1
        return i, (coord - centers[i]) / (centers[i + 1] - centers[i])

    out = np.zeros((h, w), dtype=np.uint8)
    for y in range(h):
        j0, v = axis_pos(float(y), cys)
        j1 = min(j0 + 1, ty - 1)
        for x in range(w):
            i0, u = axis_pos(float(x), cxs)
            i1 = min(i0 + 1, tx - 1)
            p = img[y, x]
            val = (
                luts[j0][i0][p] * (1 - u) * (1 - v)
                + luts[j0][i1][p] * u * (1 - v)
                + luts[j1][i0][p] * (1 - u) * v
                + luts[j1][i1][p] * u * v
            )
            out[y, x] = int(_clamp(np.floor(val + 0.5), 0.0, 255.0))
    return out


def _correlate_oracle(ch_f, kernel):
    """Cross-correlation with replicate borders, scalar accumulation."""
    h, w = ch_f.shape
    k = kernel.shape[0]
    pad = k // 2
    out = np.zeros((h, w), dtype=np.float64)
    for y in range(h):
        for x in range(w):
            acc = 0.0
            for i in range(k):
                for j in range(k):
                    weight = kernel[i, j]
                    if weight != 0.0:
                        yy = _clamp(y + i - pad, 0, h - 1)
                        xx = _clamp(x + j - pad, 0, w - 1)
                        acc = acc + weight * ch_f[yy, xx]
            out[y, x] = acc
    return out


def canny_oracle(img, low, high, sigma=1.4):
    h, w = img.shape
    ax = np.arange(-2, 3, dtype=np.float64)
    gauss = np.exp(-(ax[:, None] ** 2 + ax[None, :] ** 2) / (2.0 * sigma * sigma))
    gauss = gauss / gauss.sum()
    smoothed = _correlate_oracle(img.astype(np.float64), gauss)
    sobel_x = np.array([[-1, 0, 1], [-2, 0, 2], [-1, 0, 1]], dtype=np.float64)
    sobel_y = np.array([[-1, -2, -1], [0, 0, 0], [1, 2, 1]], dtype=np.float64)
    gx = _correlate_oracle(smoothed, sobel_x)
    gy = _correlate_oracle(smoothed, sobel_y)

    mag = np.zeros((h, w), dtype=np.float64)
    direction = np.zeros((h, w), dtype=np.int64)
    for y in range(h):
        for x in range(w):
            mag[y, x] = np.hypot(gx[y, x], gy[y, x])
            a = np.mod(np.degrees(np.arctan2(gy[y, x], gx[y, x])), 180.0)
            if 22.5 <= a < 67.5:
                direction[y, x] = 45
            elif 67.5 <= a < 112.5:
                direction[y, x] = 90
            elif 112.5 <= a < 157.5:
                direction[y, x] = 135
            else:
                direction[y, x] = 0

    offsets = {0: (0, 1), 45: (1, 1), 90: (1, 0), 135: (1, -1)}

    def mag_at(y, x):
        if 0 <= y < h and 0 <= x < w:
            return mag[y, x]
        return 0.0

    keep = np.zeros((h, w), dtype=bool)
    for y in range(h):
        for x in range(w):
            dy, dx = offsets[direction[y, x]]
            fwd = mag_at(y + dy, x + dx)
            bwd = mag_at(y - dy, x - dx)
            keep[y, x] = mag[y, x] >= fwd and mag[y, x] > bwd

    strong = [(y, x) for y in range(h) for x in range(w) if keep[y, x] and mag[y, x] >= high]
    weak = keep & (mag >= low)
    edges = np.zeros((h, w), dtype=bool)
    stack = list(strong)
    for y, x in strong:
        edges[y, x] = True
    while stack:
        y, x = stack.pop()
        for dy in (-1, 0, 1):
            for dx in (-1, 0, 1):
                yy, xx = y + dy, x + dx
                if 0 <= yy < h and 0 <= xx < w and weak[yy, xx] and not edges[yy, xx]:
                    edges[yy, xx] = True
                    stack.append((yy, xx))
    return edges


def hist_equalize_oracle(img):
    """Global (single-tile, unclipped) histogram equalization."""
    hist = [0] * 256
    for v in img.ravel():
        hist[v] += 1
    lut = []
    running = 0
    for b in range(256):
        running += hist[b]
        lut.append(int(_clamp(np.floor(running * 255.0 / img.size + 0.5), 0.0, 255.0)))
    out = np.zeros_like(img)
    for y in range(img.shape[0]):
        for x in range(img.shape[1]):
            out[y, x] = lut[img[y, x]]
    return out
