"""File formats: binary blobs for kernels and fields, PGM images, CSV dumps,
and flat JSON manifests for parameters.

Blob layout (all integers little-endian uint32 after the 4-byte magic):

    magic   b"CSKB"
    version 1
    kind    0 = kernel, 1 = field
    p, q    signature
    c_in, c_out   channel counts (fields store their channel count twice)
    ndim    number of payload axes
    sizes   ndim uint32
    payload float64 little-endian, C order
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .algebra import Signature, blade_label
from .conv import MultivectorField
from .kernel import KernelGrid, SteerableKernel

__all__ = [
    "save_kernel_blob",
    "load_kernel_blob",
    "save_field_blob",
    "load_field_blob",
    "save_field_npy",
    "write_pgm",
    "kernel_to_pgms",
    "kernel_to_csv",
    "params_to_json",
    "params_from_json",
]

MAGIC = b"CSKB"
VERSION = 1
KIND_KERNEL = 0
KIND_FIELD = 1


def _write_blob(path, kind: int, sig: Signature, c_in: int, c_out: int,
                payload: np.ndarray) -> None:
    payload = np.ascontiguousarray(payload, dtype="<f8")
    header = struct.pack(
        f"<4s{6 + 1 + payload.ndim}I",
        MAGIC, VERSION, kind, sig.p, sig.q, c_in, c_out,
        payload.ndim, *payload.shape,
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(payload.tobytes())


def _read_blob(path) -> dict:
    raw = Path(path).read_bytes()
    if raw[:4] != MAGIC:
        raise ValueError(f"{path}: not a kernel/field blob")
    fixed = struct.unpack_from("<7I", raw, 4)
    version, kind, p, q, c_in, c_out, ndim = fixed
    if version != VERSION:
        raise ValueError(f"{path}: unsupported blob version {version}")
    sizes = struct.unpack_from(f"<{ndim}I", raw, 4 + 28)
    offset = 4 + 28 + 4 * ndim
    payload = np.frombuffer(raw, dtype="<f8", offset=offset).reshape(sizes)
    return {
        "kind": kind,
        "sig": Signature(p, q),
        "c_in": c_in,
        "c_out": c_out,
        "payload": payload.astype(np.float64),
    }


def save_kernel_blob(kernel: SteerableKernel, path) -> None:
    _write_blob(path, KIND_KERNEL, kernel.sig, kernel.c_in, kernel.c_out, kernel.data)


def load_kernel_blob(path) -> SteerableKernel:
    blob = _read_blob(path)
    if blob["kind"] != KIND_KERNEL:
        raise ValueError(f"{path}: blob holds a field, not a kernel")
    sig = blob["sig"]
    sizes = blob["payload"].shape[2:]
    grid = KernelGrid.centered(sig, sizes)
    return SteerableKernel(sig, blob["c_in"], blob["c_out"], grid, blob["payload"])


def save_field_blob(field: MultivectorField, path) -> None:
    _write_blob(path, KIND_FIELD, field.sig, field.channels, field.channels, field.data)


def load_field_blob(path) -> MultivectorField:
    blob = _read_blob(path)
    if blob["kind"] != KIND_FIELD:
        raise ValueError(f"{path}: blob holds a kernel, not a field")
    return MultivectorField(blob["sig"], blob["payload"])


def save_field_npy(field: MultivectorField, path) -> None:
    """Raw NPY export of the (c, Y..., 2^d) array for interop."""
    np.save(path, field.data)


def write_pgm(path, image: np.ndarray) -> None:
    """Binary 8-bit PGM; values are scaled symmetrically around zero."""
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 2:
        raise ValueError("PGM export needs a 2-D array")
    peak = np.max(np.abs(image))
    scale = 127.0 / peak if peak > 0 else 0.0
    pixels = np.clip(np.rint(128.0 + image * scale), 0, 255).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{image.shape[1]} {image.shape[0]}\n255\n".encode())
        fh.write(pixels.tobytes())


def kernel_to_pgms(kernel: SteerableKernel, outdir) -> list[Path]:
    """One grayscale image per (output blade, input blade) block pair.

    Only 2-D kernel grids can be rendered; c_in * c_out * 4^d files.
    """
    if len(kernel.grid.sizes) != 2:
        raise ValueError("PGM export is defined for 2-D kernel grids")
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    n = kernel.sig.n_blades
    paths = []
    for o in range(kernel.c_out):
        for a in range(n):
            for i in range(kernel.c_in):
                for b in range(n):
                    name = f"block_o{o}_{blade_label(a)}_i{i}_{blade_label(b)}.pgm"
                    path = outdir / name
                    write_pgm(path, kernel.data[o * n + a, i * n + b])
                    paths.append(path)
    return paths


def kernel_to_csv(kernel: SteerableKernel, path) -> None:
    """Flat CSV: row/column operator indices, grid indices, value."""
    sizes = kernel.grid.sizes
    with open(path, "w") as fh:
        axes = ",".join(f"x{j + 1}" for j in range(len(sizes)))
        fh.write(f"row,col,{axes},value\n")
        for row in range(kernel.data.shape[0]):
            for col in range(kernel.data.shape[1]):
                plane = kernel.data[row, col]
                for idx in np.ndindex(*sizes):
                    pos = ",".join(str(i) for i in idx)
                    fh.write(f"{row},{col},{pos},{float(plane[idx])!r}\n")


def params_to_json(params: dict) -> str:
    """Flat manifest keyed by tensor name; shapes stored alongside data."""
    tensors = {
        name: {"shape": list(np.shape(value)), "data": np.asarray(value).ravel().tolist()}
        for name, value in sorted(params.items())
    }
    return json.dumps({"version": VERSION, "tensors": tensors})


def params_from_json(text: str) -> dict:
    obj = json.loads(text)
    if obj.get("version") != VERSION:
        raise ValueError(f"unsupported manifest version {obj.get('version')}")
    out = {}
    for name, spec in obj["tensors"].items():
        out[name] = np.array(spec["data"], dtype=np.float64).reshape(spec["shape"])
    return out
