"""Regenerates the frozen fixtures in this directory.

Requires numpy, mpmath, Pillow and scikit-image. The outputs are committed;
tests never run this script.
"""
import pathlib
import struct

import mpmath
import numpy as np
from PIL import Image
from skimage.metrics import structural_similarity

HERE = pathlib.Path(__file__).resolve().parent


def save_vtf(path, arr, range_tag=0):
    arr = np.ascontiguousarray(arr, dtype="<f4")
    with open(path, "wb") as f:
        f.write(b"VXT1" + struct.pack("<4IBB", *arr.shape, 1, range_tag))
        f.write(arr.tobytes())


def schedules():
    mpmath.mp.dps = 50
    lo, hi = mpmath.sqrt(mpmath.mpf("0.00085")), mpmath.sqrt(mpmath.mpf("0.012"))
    betas = {
        "scaled_linear": [(lo + (hi - lo) * i / 999) ** 2 for i in range(1000)],
        "linear": [mpmath.mpf("1e-4") + (mpmath.mpf("0.02") - mpmath.mpf("1e-4")) * i / 999
                   for i in range(1000)],
    }
    for name, b in betas.items():
        cum = [mpmath.mpf(1)]
        for beta in b:
            cum.append(cum[-1] * (1 - beta))
        for steps in (25, 1000):
            rows = [mpmath.nstr(cum[int(mpmath.nint(mpmath.mpf(t) * 1000 / steps))], 20)
                    for t in range(steps + 1)]
            (HERE / f"alpha_bar_{name}_T{steps}.txt").write_text("\n".join(rows) + "\n")


def ramps():
    gray = HERE / "ramp_gray"
    rgb = HERE / "ramp_rgb"
    gray.mkdir(exist_ok=True)
    rgb.mkdir(exist_ok=True)
    h, w = 6, 8
    y, x = np.mgrid[0:h, 0:w]
    for n in range(3):
        g = ((x * 17 + y * 3 + n * 5) % 256).astype(np.uint8)
        Image.fromarray(g, mode="L").save(gray / f"frame_{n:02d}.png")
    for n in range(2):
        planes = [((x * 17 + y * 3 + n * 5 + 40 * c) % 256).astype(np.uint8) for c in range(3)]
        Image.fromarray(np.stack(planes, axis=-1), mode="RGB").save(rgb / f"frame_{n:02d}.png")


def ssim_pairs():
    rng = np.random.default_rng(20240611)
    lines = []
    for k in range(5):
        h, w = 16 + 2 * k, 20 + k
        base = rng.random((3, h, w))
        a = np.clip(base, 0, 1).astype(np.float32)
        b = np.clip(base + rng.normal(0, 0.05 + 0.05 * k, base.shape), 0, 1).astype(np.float32)
        save_vtf(HERE / f"ssim_a{k}.vtf", a[None])
        save_vtf(HERE / f"ssim_b{k}.vtf", b[None])
        v = structural_similarity(a.astype(np.float64), b.astype(np.float64), channel_axis=0,
                                  gaussian_weights=True, sigma=1.5, use_sample_covariance=False,
                                  data_range=1.0)
        lines.append(f"{v:.12f}")
    (HERE / "ssim_expected.txt").write_text("\n".join(lines) + "\n")


if __name__ == "__main__":
    schedules()
    ramps()
    ssim_pairs()
