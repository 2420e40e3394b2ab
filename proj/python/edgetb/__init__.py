"""Python access to the edge testbed core: gateway codecs, frames, scenario runs."""

import json

from ._core import (
    CodecRegistry,
    EdgeError,
    Message,
    RunSummary,
    decode_frame,
    encode_frame,
    reduce_metrics,
    run_scenario,
    validate_scenario,
)

__all__ = [
    "CodecRegistry",
    "EdgeError",
    "Message",
    "RunSummary",
    "decode_frame",
    "encode_frame",
    "metrics",
    "reduce_metrics",
    "run_scenario",
    "validate_scenario",
]


def metrics(summary):
    """Metrics of a finished run as a dict."""
    return json.loads(summary.metrics_json)
