"""Analytical workload synthesis for capsule networks.

Produces a :class:`~spm_dse.workload.WorkloadTrace` from a layer list by
applying a fixed dataflow mapping onto a ``rows x cols`` MAC array:

* weights are reused across spatial positions, so a convolution keeps only
  the kernels of the active ``min(C_in, rows) x min(C_out, cols)`` channel
  tile resident;
* accumulators are output-stationary and hold the partial sums of the
  current output-channel tile across the full spatial map;
* the data memory buffers the input-row strip a kernel needs to produce one
  output row (a fully-connected capsule layer keeps its whole input resident
  because dynamic routing revisits it);
* words are 8-bit fixed point, accumulators 32-bit.

These are documented approximations: real traces measured on hardware are
the primary input format, and the estimator exists to size designs for
networks nobody has profiled yet.  A capsule layer treats the capsule count
and capsule dimension of its input as interchangeable at a fixed product
while the capsule count stays within the array rows; access counts are
mapped read/write volumes of the same dataflow.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ValidationError
from .workload import DEFAULT_CLOCK_HZ, OperationProfile, WorkloadTrace

WORD_BYTES = 1
ACC_BYTES = 4

MAPPING_ASSUMPTIONS = {
    "word_bits": 8,
    "accumulator_bits": 32,
    "dataflow": "weight-reuse, output-stationary accumulators",
    "data_buffer": "kernel-height input-row strip (full input for classcaps)",
    "note": "analytical estimate; measured traces take precedence",
}

LAYER_TYPES = ("conv", "convcaps2d", "convcaps3d", "classcaps")


@dataclass(frozen=True, slots=True)
class _Shape:
    h: int
    w: int
    c: int  # flattened channels = capsules * capsule dim

    @property
    def volume(self) -> int:
        return self.h * self.w * self.c


def _ceil_div(a: int, b: int) -> int:
    return -(-a // b)


def _conv_ops(name: str, layer: dict, shape: _Shape, rows: int,
              cols: int) -> tuple[list[OperationProfile], _Shape]:
    kernel = layer["kernel"]
    stride = layer.get("stride", 1)
    if layer["type"] == "conv":
        c_out = layer["out_channels"]
    else:
        c_out = layer["out_caps"] * layer["caps_dim"]
    if kernel > shape.h or kernel > shape.w:
        raise ValidationError(
            f"layer {name!r}: kernel {kernel} exceeds input {shape.h}x{shape.w}")
    h_out = (shape.h - kernel) // stride + 1
    w_out = (shape.w - kernel) // stride + 1
    macs = h_out * w_out * c_out * kernel * kernel * shape.c

    usage_data = kernel * shape.w * shape.c * WORD_BYTES
    usage_weight = (kernel * kernel * min(shape.c, rows)
                    * min(c_out, cols) * WORD_BYTES)
    usage_acc = h_out * w_out * min(c_out, cols) * ACC_BYTES

    op = OperationProfile(
        name=name,
        usage_data=usage_data, usage_weight=usage_weight, usage_acc=usage_acc,
        reads_data=macs // cols, reads_weight=macs // rows,
        reads_acc=macs // rows,
        writes_data=shape.volume * WORD_BYTES,
        writes_weight=kernel * kernel * shape.c * c_out * WORD_BYTES,
        writes_acc=macs // rows,
        cycles=_ceil_div(macs, rows * cols),
        routing_phase=False)
    return [op], _Shape(h_out, w_out, c_out)


def _routing_ops(name: str, n_caps: int, m_caps: int, d_out: int,
                 iters: int, rows: int, cols: int) -> list[OperationProfile]:
    prediction_tile = n_caps * d_out * WORD_BYTES
    coefficients = n_caps * m_caps * WORD_BYTES
    usage_data = prediction_tile + coefficients
    usage_acc = m_caps * d_out * ACC_BYTES
    macs = n_caps * m_caps * d_out
    ops = []
    for k in range(1, iters + 1):
        for phase in ("sum_squash", "update_softmax"):
            ops.append(OperationProfile(
                name=f"{name}/{phase}_{k}",
                usage_data=usage_data, usage_weight=0, usage_acc=usage_acc,
                reads_data=macs // cols, reads_weight=0,
                reads_acc=macs // rows,
                writes_data=usage_data, writes_weight=0,
                writes_acc=macs // rows,
                cycles=_ceil_div(macs, rows * cols),
                routing_phase=True))
    return ops


def _classcaps_ops(name: str, layer: dict, shape: _Shape, rows: int,
                   cols: int) -> tuple[list[OperationProfile], _Shape]:
    d_in = layer["in_dim"]
    if shape.volume % d_in:
        raise ValidationError(
            f"layer {name!r}: input volume {shape.volume} not divisible by "
            f"capsule dim {d_in}")
    n_caps = shape.volume // d_in
    m_caps = layer["out_caps"]
    d_out = layer["out_dim"]
    macs = n_caps * m_caps * d_in * d_out

    op = OperationProfile(
        name=name,
        usage_data=n_caps * d_in * WORD_BYTES,
        usage_weight=min(n_caps, rows) * m_caps * d_in * d_out * WORD_BYTES,
        usage_acc=m_caps * d_out * ACC_BYTES,
        reads_data=macs // cols, reads_weight=macs // rows,
        reads_acc=macs // rows,
        writes_data=n_caps * d_in * WORD_BYTES,
        writes_weight=n_caps * m_caps * d_in * d_out * WORD_BYTES,
        writes_acc=macs // rows,
        cycles=_ceil_div(macs, rows * cols),
        routing_phase=False)
    ops = [op]
    iters = layer.get("routing_iters", 0)
    if iters:
        ops += _routing_ops(name, n_caps, m_caps, d_out, iters, rows, cols)
    return ops, _Shape(1, 1, m_caps * d_out)


def estimate_caps_workload(layers: list[dict], array_rows: int = 16,
                           array_cols: int = 16,
                           network_name: str = "estimated",
                           clock_hz: float = DEFAULT_CLOCK_HZ) -> WorkloadTrace:
    """Synthesize a trace for a capsule network from layer descriptors.

    Each descriptor is a dict with a ``type`` from conv / convcaps2d /
    convcaps3d / classcaps plus the shape fields of that type; the first
    layer additionally carries ``input: [H, W, C]``.  convcaps3d behaves as
    convcaps2d followed by a dynamic-routing block over its output capsules.
    """
    if array_rows <= 0 or array_cols <= 0:
        raise ValidationError("array dimensions must be positive")
    if not layers:
        raise ValidationError("at least one layer is required")
    ops: list[OperationProfile] = []
    shape: _Shape | None = None
    for i, layer in enumerate(layers):
        kind = layer.get("type")
        if kind not in LAYER_TYPES:
            raise ValidationError(f"unsupported layer type {kind!r}")
        name = layer.get("name", f"L{i}")
        if "input" in layer:
            h, w, c = layer["input"]
            shape = _Shape(h, w, c)
        if shape is None:
            raise ValidationError(f"layer {name!r}: no input shape available")
        if kind in ("conv", "convcaps2d", "convcaps3d"):
            new_ops, shape = _conv_ops(name, layer, shape, array_rows,
                                       array_cols)
            ops += new_ops
            if kind == "convcaps3d":
                iters = layer.get("routing_iters", 0)
                if iters:
                    caps_dim = layer["caps_dim"]
                    n_caps = shape.volume // caps_dim
                    ops += _routing_ops(name, n_caps, layer["out_caps"],
                                        caps_dim, iters, array_rows,
                                        array_cols)
        else:
            new_ops, shape = _classcaps_ops(name, layer, shape, array_rows,
                                            array_cols)
            ops += new_ops
    return WorkloadTrace(network_name=network_name, operations=tuple(ops),
                         clock_hz=clock_hz)
