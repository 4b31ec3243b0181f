"""Regenerate the grayscale PGM test photographs under tests/data/.

The photographs ship with scikit-image (public-domain / CC0 sample data).
Each is converted to luminance, box-downsampled by an integer factor and
written as 8-bit binary PGM.
"""
import pathlib

import numpy as np
from skimage import color, data

OUT = pathlib.Path(__file__).resolve().parent.parent / "tests" / "data"

IMAGES = {
    "camera": (data.camera, 2),
    "astronaut": (data.astronaut, 2),
    "coffee": (data.coffee, 2),
    "chelsea": (data.chelsea, 2),
    "rocket": (data.rocket, 2),
    "coins": (data.coins, 1),
    "moon": (data.moon, 2),
}


def to_gray(img):
    if img.ndim == 3:
        img = color.rgb2gray(img[..., :3]) * 255.0
    return img.astype(np.float64)


def downsample(img, f):
    h, w = (img.shape[0] // f) * f, (img.shape[1] // f) * f
    img = img[:h, :w]
    return img.reshape(h // f, f, w // f, f).mean(axis=(1, 3))


def write_pgm(path, img):
    q = np.clip(np.rint(img), 0, 255).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(b"P5\n%d %d\n255\n" % (q.shape[1], q.shape[0]))
        fh.write(q.tobytes())


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    for name, (loader, factor) in IMAGES.items():
        write_pgm(OUT / f"{name}.pgm", downsample(to_gray(loader()), factor))


if __name__ == "__main__":
    main()
