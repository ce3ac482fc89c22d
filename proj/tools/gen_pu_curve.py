#!/usr/bin/env python3
"""Generates assets/pu_curve_v1.csv, the perceptually uniform luminance table.

Code values follow the DICOM grayscale standard display function JND index,
which is defined on [0.05, 4000] cd/m^2. Outside that interval the curve is
continued linearly in log10 luminance with the boundary slope. The result is
rescaled so that 0.1 cd/m^2 -> 0 and 1e4 cd/m^2 -> 255.
"""
import math
import sys

COEF = [71.498068, 94.593053, 41.912053, 9.8247004, 0.28175407,
        -1.1878455, -0.18014349, 0.14710899, -0.017046845]
LO, HI = math.log10(0.05), math.log10(4000.0)


def jnd(x):
    return sum(c * x ** k for k, c in enumerate(COEF))


def djnd(x):
    return sum(k * c * x ** (k - 1) for k, c in enumerate(COEF) if k)


def curve(x):
    if x < LO:
        return jnd(LO) + (x - LO) * djnd(LO)
    if x > HI:
        return jnd(HI) + (x - HI) * djnd(HI)
    return jnd(x)


def main(path):
    a, b = curve(-1.0), curve(4.0)
    step = 0.025
    rows = [(-5.0 + i * step) for i in range(int(round(13.0 / step)) + 1)]
    codes = [(curve(x) - a) / (b - a) * 255.0 for x in rows]
    assert all(c1 > c0 for c0, c1 in zip(codes, codes[1:])), "curve must be increasing"
    with open(path, "w") as f:
        f.write("# pu_curve version 1\n")
        f.write("# log10 luminance (cd/m^2), code value\n")
        for x, c in zip(rows, codes):
            f.write(f"{x:.3f},{c:.9f}\n")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "assets/pu_curve_v1.csv")
