#!/usr/bin/env python3
# Copyright 2026 The cxnet Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Generate the synthetic test fixtures under tests/fixtures.

Phantom radiographs: a bright body ellipse with two darker lung fields, a
spine and faint ribs. CP images carry several soft bilateral opacities in the
lower lung fields; CAP images one dense lobar consolidation in a single lung.
Each phantom comes with its lung mask.

The CLAHE golden file is produced by the plain-loop reference below, written
independently of the C++ code from the algorithm description: per-tile
histograms clipped at clip * area / 256 with the excess spread evenly (the
remainder one count per stride), equalized with the classic
round(255 * (cdf - cdf_min) / (N - cdf_min)) map, and blended bilinearly
between the four nearest tile centres.

    python3 tools/make_fixtures.py tests/fixtures
"""

import argparse
import math
import os

import cv2
import numpy as np

SIZE = 128


def ellipse(shape, cy, cx, ry, rx):
    yy, xx = np.mgrid[0 : shape[0], 0 : shape[1]]
    return ((yy - cy) / ry) ** 2 + ((xx - cx) / rx) ** 2 <= 1.0


def blob(shape, cy, cx, sigma):
    yy, xx = np.mgrid[0 : shape[0], 0 : shape[1]]
    return np.exp(-((yy - cy) ** 2 + (xx - cx) ** 2) / (2 * sigma**2))


def phantom(rng, label, size=SIZE):
    s = (size, size)
    img = np.full(s, 18.0)
    jitter = lambda a: a + rng.uniform(-0.03, 0.03) * size
    body = ellipse(s, jitter(0.55 * size), jitter(0.5 * size), 0.46 * size, 0.42 * size)
    img[body] = 150 + rng.uniform(-10, 10)
    left = ellipse(s, jitter(0.5 * size), jitter(0.32 * size), 0.28 * size, 0.12 * size)
    right = ellipse(s, jitter(0.5 * size), jitter(0.68 * size), 0.28 * size, 0.12 * size)
    lungs = left | right
    img[lungs] = 62 + rng.uniform(-8, 8)
    spine = (np.abs(np.arange(size) - size / 2) < 0.04 * size)[None, :] & body
    img[spine] = 190
    rows = np.arange(size)[:, None]
    ribs = (np.sin(rows / size * 2 * math.pi * 7 + rng.uniform(0, 6.28)) > 0.85) & lungs
    img[ribs] += 18

    if label == "CP":
        for side in (0.32, 0.68):
            for _ in range(2):
                cy = rng.uniform(0.55, 0.7) * size
                cx = (side + rng.uniform(-0.05, 0.05)) * size
                img += 70 * blob(s, cy, cx, 0.06 * size) * lungs
    elif label == "CAP":
        side = 0.32 if rng.uniform() < 0.5 else 0.68
        cy = rng.uniform(0.35, 0.6) * size
        img += 110 * blob(s, cy, side * size, 0.09 * size) * lungs

    img += rng.normal(0, 4, s)
    return np.clip(np.round(img), 0, 255).astype(np.uint8), lungs.astype(np.uint8)


# --- CLAHE reference -------------------------------------------------------


def equalization_lut(hist):
    total = sum(hist)
    cdf_min = next((h for h in hist if h), 0)
    if total == cdf_min:
        return list(range(256))
    lut, cdf = [], 0
    for h in hist:
        cdf += h
        num = cdf - cdf_min if cdf > cdf_min else 0
        lut.append(int(math.floor(255.0 * num / (total - cdf_min) + 0.5)))
    return lut


def clip_hist(hist, limit):
    hist = list(hist)
    excess = 0
    for i, h in enumerate(hist):
        if h > limit:
            excess += h - limit
            hist[i] = limit
    batch, residual = divmod(excess, 256)
    hist = [h + batch for h in hist]
    if residual:
        step = max(256 // residual, 1)
        i = 0
        while i < 256 and residual > 0:
            hist[i] += 1
            i += step
            residual -= 1
    return hist


def reference_clahe(img, grid, clip):
    rows, cols = img.shape
    th, tw = -(-rows // grid), -(-cols // grid)
    limit = max(1, int(clip * th * tw / 256))

    def refl(i, n):
        while i < 0 or i >= n:
            i = -i if i < 0 else 2 * n - 2 - i
        return i

    luts = {}
    for tr in range(grid):
        for tc in range(grid):
            hist = [0] * 256
            for y in range(tr * th, (tr + 1) * th):
                for x in range(tc * tw, (tc + 1) * tw):
                    hist[int(img[refl(y, rows), refl(x, cols)])] += 1
            luts[tr, tc] = equalization_lut(clip_hist(hist, limit))

    def axis(i, tile):
        f = i * (1.0 / tile) - 0.5
        a = math.floor(f)
        return max(a, 0), min(a + 1, grid - 1), f - a

    out = np.zeros_like(img)
    for y in range(rows):
        ya, yb, fy = axis(y, th)
        for x in range(cols):
            xa, xb, fx = axis(x, tw)
            v = int(img[y, x])
            top = luts[ya, xa][v] * (1.0 - fx) + luts[ya, xb][v] * fx
            bottom = luts[yb, xa][v] * (1.0 - fx) + luts[yb, xb][v] * fx
            out[y, x] = min(255, max(0, int(math.floor(top * (1.0 - fy) + bottom * fy + 0.5))))
    return out


def checkerboard(size=32, square=4):
    yy, xx = np.mgrid[0:size, 0:size]
    dark = ((yy // square) + (xx // square)) % 2 == 0
    ramp = (yy + xx) // 2
    return np.where(dark, 40 + ramp, 170 + ramp).astype(np.uint8)


# ---------------------------------------------------------------------------


def write_png(path, arr):
    if not cv2.imwrite(path, arr):
        raise SystemExit("cannot write " + path)


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("out", nargs="?", default=os.path.join(os.path.dirname(__file__), "..", "tests", "fixtures"))
    ap.add_argument("--seed", type=int, default=20200504)
    args = ap.parse_args()
    out = args.out
    for sub in ("images", "masks", "golden"):
        os.makedirs(os.path.join(out, sub), exist_ok=True)
    rng = np.random.default_rng(args.seed)

    plan = [("NORMAL", "nihcxr", "nih-cxr14", "PA")] * 10 + [("CP", "cohen", "cohen-github", "AP")] * 10
    plan += [("CAP", "pedcap", "pediatric-gmc", "PA")] * 6
    rows3, rows2, pairs = [], [], []
    counter = {}
    for label, prefix, source, view in plan:
        counter[prefix] = counter.get(prefix, 0) + 1
        rid = f"{prefix}{counter[prefix]:02d}"
        img, mask = phantom(rng, label)
        write_png(os.path.join(out, "images", rid + ".png"), img)
        write_png(os.path.join(out, "masks", rid + ".png"), mask * 255)
        row = f"{rid},images/{rid}.png,{source},{view},{label}"
        rows3.append(row)
        if label != "CAP":
            rows2.append(row)
        if len(pairs) < 10 and counter[prefix] <= 5:
            pairs.append(f"images/{rid}.png,masks/{rid}.png")

    for k in range(2):
        rid = f"lateral{k + 1:02d}"
        img, _ = phantom(rng, "NORMAL")
        write_png(os.path.join(out, "images", rid + ".png"), img)
        row = f"{rid},images/{rid}.png,radiopaedia,L,NORMAL"
        rows2.append(row)
        rows3.append(row)

    header = "id,path,source,view,label\n"
    with open(os.path.join(out, "manifest.csv"), "w") as f:
        f.write(header + "\n".join(rows2) + "\n")
    with open(os.path.join(out, "manifest3.csv"), "w") as f:
        f.write(header + "\n".join(rows3) + "\n")
    with open(os.path.join(out, "manifest_small.csv"), "w") as f:
        f.write(header + "\n".join([rows2[0], rows2[10], rows2[-1]]) + "\n")
    with open(os.path.join(out, "manifest_dup.csv"), "w") as f:
        f.write(header + rows2[0] + "\n" + rows2[0].replace("nihcxr01,", "copy01,", 1) + "\n" + rows2[10] + "\n")
    with open(os.path.join(out, "manifest_bad.csv"), "w") as f:
        f.write(header + rows2[0] + "\n" + rows2[10].replace(",CP", ",covid") + "\n")
    with open(os.path.join(out, "pairs.csv"), "w") as f:
        f.write("image,mask\n" + "\n".join(pairs) + "\n")

    # 16-bit ramp 0..1000 in steps of 4 along each row.
    gray16 = np.tile((4 * np.arange(251)).astype(np.uint16), (16, 1))
    write_png(os.path.join(out, "images", "gray16.png"), gray16)

    board = checkerboard()
    write_png(os.path.join(out, "golden", "checkerboard32.png"), board)
    write_png(os.path.join(out, "golden", "checkerboard32_clahe_g8_c2.png"), reference_clahe(board, 8, 2.0))
    write_png(os.path.join(out, "golden", "checkerboard32_clahe_g4_c3.png"), reference_clahe(board, 4, 3.0))


if __name__ == "__main__":
    main()
