"""Atomic file output and deterministic checkpoint containers."""

from __future__ import annotations

import io
import json
import os
import tempfile
import zipfile
from pathlib import Path

import numpy as np

from .filters import FilterParams
from .solver import FlowState, ForcingSpec
from .spectral import GridSpec, SpectralField

# fixed member timestamp so identical states give identical bytes
_ZIP_DATE = (1980, 1, 1, 0, 0, 0)


def atomic_write_bytes(path, data: bytes):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path, text: str):
    atomic_write_bytes(path, text.encode("utf-8"))


def _npy_bytes(arr) -> bytes:
    buf = io.BytesIO()
    np.lib.format.write_array(buf, np.asarray(arr), allow_pickle=False)
    return buf.getvalue()


def checkpoint_bytes(state: FlowState) -> bytes:
    """Serialize a state as a zip of ``.npy`` members plus ``meta.json``."""
    meta = {
        "format": "timerelax-checkpoint",
        "version": 1,
        "grid": state.grid.to_dict(),
        "filter": state.filter.to_dict(),
        "chi": state.chi,
        "nu": state.nu,
        "t": state.t,
        "forcing": state.forcing.to_dict(),
    }
    members = {"meta.json": json.dumps(meta, sort_keys=True).encode(), "coeffs.npy": _npy_bytes(state.u.coeffs)}
    if state.forcing.custom is not None:
        members["forcing_coeffs.npy"] = _npy_bytes(state.forcing.custom.coeffs)
    buf = io.BytesIO()
    with zipfile.ZipFile(buf, "w", compression=zipfile.ZIP_STORED) as zf:
        for name, data in members.items():
            zf.writestr(zipfile.ZipInfo(name, date_time=_ZIP_DATE), data)
    return buf.getvalue()


def save_checkpoint(path, state: FlowState):
    atomic_write_bytes(path, checkpoint_bytes(state))


def load_checkpoint(path) -> FlowState:
    with zipfile.ZipFile(path) as zf:
        meta = json.loads(zf.read("meta.json"))
        coeffs = np.lib.format.read_array(io.BytesIO(zf.read("coeffs.npy")), allow_pickle=False)
        names = zf.namelist()
        custom = None
        grid = GridSpec(**meta["grid"])
        if "forcing_coeffs.npy" in names:
            fc = np.lib.format.read_array(io.BytesIO(zf.read("forcing_coeffs.npy")), allow_pickle=False)
            custom = SpectralField(grid, fc)
    return FlowState(
        grid=grid,
        u=SpectralField(grid, coeffs),
        nu=meta["nu"],
        chi=meta["chi"],
        filter=FilterParams(**meta["filter"]),
        t=meta["t"],
        forcing=ForcingSpec(custom=custom, **meta["forcing"]),
    )
