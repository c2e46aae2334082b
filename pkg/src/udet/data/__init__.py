"""Synthetic dataset generation, PPM / annotation I/O, and augmentation."""

from udet.data.annotations import (
    image_id_for,
    load_annotations,
    load_ground_truth,
    parse_annotations,
    read_manifest,
    save_annotations,
    write_manifest,
)
from udet.data.augment import AugmentConfig, affine, augment, hsv_jitter, scale_hsv
from udet.data.generate import SHAPES, DatasetSpec, generate_dataset, shape_mask
from udet.data.ppm import decode_ppm, encode_ppm, load_image, save_image

__all__ = [
    "SHAPES",
    "AugmentConfig",
    "DatasetSpec",
    "affine",
    "augment",
    "decode_ppm",
    "encode_ppm",
    "generate_dataset",
    "hsv_jitter",
    "image_id_for",
    "load_annotations",
    "load_ground_truth",
    "load_image",
    "parse_annotations",
    "read_manifest",
    "save_annotations",
    "save_image",
    "scale_hsv",
    "shape_mask",
    "write_manifest",
]
