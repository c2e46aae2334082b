"""Grid encoding, the multi-part loss, decoding, and non-maximal suppression."""

from udet.detect.boxes import Detection, GroundTruthBox, iou, iou_many
from udet.detect.detfile import format_detections, parse_detections, read_detections, sort_detections, write_detections
from udet.detect.grid import (
    GridConfig,
    TargetTensor,
    assign_responsibility,
    decode_predictions,
    decoded_boxes,
    encode_targets,
    grid_cell_of,
    prediction_tensor,
)
from udet.detect.loss import Assignment, LossBreakdown, assign, evaluate_loss, yolo_loss
from udet.detect.nms import nms

__all__ = [
    "Assignment",
    "Detection",
    "GridConfig",
    "GroundTruthBox",
    "LossBreakdown",
    "TargetTensor",
    "assign",
    "assign_responsibility",
    "decode_predictions",
    "decoded_boxes",
    "encode_targets",
    "evaluate_loss",
    "format_detections",
    "grid_cell_of",
    "iou",
    "iou_many",
    "nms",
    "parse_detections",
    "prediction_tensor",
    "read_detections",
    "sort_detections",
    "write_detections",
    "yolo_loss",
]
