"""Local descriptors: SIFT and SURF (real), ORB and BRISK (binary).

Every family has a batch function returning a 2-D array for a keypoint list and
a single-keypoint ``describe_*`` wrapper returning a descriptor record.
Binary descriptors are unpacked ``uint8`` arrays of 0/1 values.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import InputError
from ..fields import CHANNELS, FlowField, normalize_field
from ..keypoints import Keypoint
from .brisk import brisk_descriptors
from .orb import orb_descriptors
from .sift import sift_descriptors
from .surf import surf_descriptors

LENGTHS = {"sift": 128, "surf": 64, "orb": 256, "brisk": 512}
BINARY = {"orb", "brisk"}


@dataclass(frozen=True)
class RealDescriptor:
    values: np.ndarray
    keypoint: Keypoint
    degenerate: bool = False


@dataclass(frozen=True)
class BinaryDescriptor:
    bits: np.ndarray
    keypoint: Keypoint


def is_binary(family: str) -> bool:
    return _check_family(family) in BINARY


def _check_family(family: str) -> str:
    if family not in LENGTHS:
        raise InputError(f"unknown descriptor {family!r}; choose from {sorted(LENGTHS)}")
    return family


def compute(family: str, grid, keypoints) -> tuple:
    """Describe ``keypoints`` on one grid.

    Returns ``(array, degenerate)``: ``(N, L)`` float32 for real families,
    ``(N, L)`` uint8 bits for binary ones; ``degenerate`` flags zero-energy
    real descriptors (always False for binary).
    """
    _check_family(family)
    if family == "sift":
        return sift_descriptors(grid, keypoints)
    if family == "surf":
        return surf_descriptors(grid, keypoints)
    if family == "orb":
        bits, _ = orb_descriptors(grid, keypoints)
    else:
        bits, _ = brisk_descriptors(grid, keypoints)
    return bits, np.zeros(len(bits), dtype=bool)


def describe_sift(grid, kp: Keypoint) -> RealDescriptor:
    vals, deg = sift_descriptors(grid, [kp])
    return RealDescriptor(vals[0], kp, bool(deg[0]))


def describe_surf(grid, kp: Keypoint) -> RealDescriptor:
    vals, deg = surf_descriptors(grid, [kp])
    return RealDescriptor(vals[0], kp, bool(deg[0]))


def describe_orb(grid, kp: Keypoint, use_centroid: bool = True) -> BinaryDescriptor:
    bits, _ = orb_descriptors(grid, [kp], use_centroid=use_centroid)
    return BinaryDescriptor(bits[0], kp)


def describe_brisk(grid, kp: Keypoint) -> BinaryDescriptor:
    bits, _ = brisk_descriptors(grid, [kp])
    return BinaryDescriptor(bits[0], kp)


def compute_sd(family: str, grids, keypoints) -> tuple:
    """Describe each keypoint on every channel of ``grids`` (C, H, W) and concatenate in channel order.

    A concatenated descriptor is flagged degenerate only when every block is.
    """
    blocks, degenerate = [], np.ones(len(keypoints), dtype=bool)
    for grid in grids:
        arr, deg = compute(family, grid, keypoints)
        blocks.append(arr)
        degenerate &= deg
    if not blocks:
        raise InputError("no channels to describe")
    return np.concatenate(blocks, axis=1), degenerate


def describe_sd(field: FlowField, kp: Keypoint, family: str = "sift", normalize: bool = True):
    """Concatenate the ``family`` descriptor of ``kp`` over the five canonical channels.

    Channels are min-max normalised first unless ``normalize`` is False.
    """
    f = field.canonical()
    grids = normalize_field(f) if normalize else f.data.astype(np.float64)
    arr, deg = compute_sd(family, grids, [kp])
    if family in BINARY:
        return BinaryDescriptor(arr[0], kp)
    return RealDescriptor(arr[0], kp, bool(deg[0]))


__all__ = [
    "BINARY", "CHANNELS", "LENGTHS", "BinaryDescriptor", "RealDescriptor",
    "brisk_descriptors", "compute", "compute_sd", "describe_brisk", "describe_orb",
    "describe_sd", "describe_sift", "describe_surf", "is_binary", "orb_descriptors",
    "sift_descriptors", "surf_descriptors",
]
