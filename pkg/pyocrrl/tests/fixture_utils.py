from __future__ import print_function, division
import os
import json
import shutil

import numpy as np

from pyocrrl.rv import RasterImage


DATA_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), "data")
FIXTURE20 = os.path.join(DATA_DIR, "fixture20.jsonl")

BLOCK = 28


def block_image(levels, block=BLOCK):
    """gray RasterImage made of block x block squares, one per entry of
    the 2d array levels
    """
    levels = np.asarray(levels, dtype=np.uint8)
    gray = np.kron(levels, np.ones((block, block), dtype=np.uint8))
    return RasterImage(np.stack([gray, gray, gray], axis=2))


def random_image(rng, width, height):
    return RasterImage(rng.integers(0, 256, size=(height, width, 3),
                                    dtype=np.uint8))


def constant_image(value, width=16, height=16):
    return RasterImage(np.full((height, width, 3), value, dtype=np.uint8))


def write_png(img, filename):
    with open(filename, "wb") as f:
        f.write(img.to_png_bytes())


def centered_unit(a):
    v = np.asarray(a, dtype=np.float64).ravel()
    v = v - v.mean()
    return v / np.linalg.norm(v)


def fixture_levels(name):
    """deterministic 8x8 gray levels for a fixture image name"""
    seed = sum(ord(c) * (i + 1) for i, c in enumerate(name))
    return np.random.default_rng(seed).integers(0, 256, size=(8, 8))


def setup_fixture20(dirname):
    """copy the 20 record fixture into dirname and write the images it
    references.  returns the dataset path
    """
    if not os.path.exists(dirname):
        os.makedirs(dirname)
    dataset = os.path.join(dirname, "fixture20.jsonl")
    shutil.copy(FIXTURE20, dataset)
    with open(dataset, 'r', encoding="utf-8") as f:
        for line in f:
            if len(line.strip()) == 0:
                continue
            obj = json.loads(line)
            for key in ("gt_image_path", "pred_image_path"):
                if obj.get(key) is None:
                    continue
                path = os.path.join(dirname, obj[key])
                if not os.path.exists(os.path.dirname(path)):
                    os.makedirs(os.path.dirname(path))
                write_png(block_image(fixture_levels(obj[key])), path)
    return dataset


def write_config(filename, lines):
    with open(filename, 'w', encoding="utf-8") as f:
        f.write('\n'.join(lines) + '\n')
    return filename
