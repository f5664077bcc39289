"""Equirectangular convolutions and room-layout recovery from panoramas."""

from ._backend import NAME as BACKEND
from .conv import ConvLayer, conv_equi, conv_equi_backward, conv_standard, conv_standard_backward
from .layout import Layout3D, LayoutError, LayoutModel
from .layout3d import CornerSet, InsufficientCornersError, extract_corners, reconstruct_3d
from .loss import class_weights, multi_scale_loss, weighted_bce
from .metrics import MetricReport, corner_error, evaluate_layout, iou3d, map_metrics, pixel_error
from .offsets import KernelSpec, OffsetField, offset_field
from .optim import AdamState, adam_step
from .sphere import ImageGeometry, SphericalAngles, angles_to_pixel, pixel_to_angles

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "ConvLayer", "conv_equi", "conv_equi_backward", "conv_standard", "conv_standard_backward",
    "Layout3D", "LayoutError", "LayoutModel", "CornerSet", "InsufficientCornersError",
    "extract_corners", "reconstruct_3d", "class_weights", "multi_scale_loss", "weighted_bce",
    "MetricReport", "corner_error", "evaluate_layout", "iou3d", "map_metrics", "pixel_error",
    "KernelSpec", "OffsetField", "offset_field", "AdamState", "adam_step",
    "ImageGeometry", "SphericalAngles", "angles_to_pixel", "pixel_to_angles",
]
