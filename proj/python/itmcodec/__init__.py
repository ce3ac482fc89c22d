"""Invertible tone mapping: encode HDR radiance into a styled 8-bit image and restore it."""

from ._itm import (
    Codec,
    ItmError,
    durand,
    evaluate,
    pu_psnr,
    read_hdr,
    read_ldr,
    reinhard,
    ssim,
    synthetic_scene,
    train,
    write_hdr,
    write_ldr,
)

__all__ = [
    "Codec",
    "ItmError",
    "durand",
    "evaluate",
    "pu_psnr",
    "read_hdr",
    "read_ldr",
    "reinhard",
    "ssim",
    "synthetic_scene",
    "train",
    "write_hdr",
    "write_ldr",
]
