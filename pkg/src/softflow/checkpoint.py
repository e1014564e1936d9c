"""Self-describing checkpoint container.

Layout: a zip archive (stored, fixed timestamps) holding

* ``manifest.json`` -- ``format_version``, free-form ``meta`` and, per
  section, the ordered list of ``{"name", "shape"}`` records plus optional
  ``layer_kinds``;
* ``<section>/<param>.npy`` -- one float64 buffer per parameter, in
  declaration order.

Buffers are written with :func:`numpy.lib.format.write_array`, so a load of
a save reproduces every parameter bit for bit.
"""
from __future__ import annotations

import io
import json
import zipfile

import numpy as np

FORMAT_VERSION = 1
_EPOCH = (1980, 1, 1, 0, 0, 0)


class CheckpointError(ValueError):
    pass


def _write(zf, name, payload):
    info = zipfile.ZipInfo(name, date_time=_EPOCH)
    info.compress_type = zipfile.ZIP_STORED
    info.external_attr = 0o644 << 16
    zf.writestr(info, payload)


def _layer_kinds(module):
    kinds = []
    for child in _walk(module):
        kind = getattr(type(child), "kind", None)
        if kind and kind != "abstract":
            kinds.append(kind)
    return kinds


def _walk(module):
    yield module
    for child in module._creg.values():
        yield from _walk(child)


def save(path, sections, meta=None):
    """Write ``sections`` (name -> Module or dict of arrays) and ``meta`` to ``path``."""
    manifest = {"format_version": FORMAT_VERSION, "meta": meta or {}, "sections": {}}
    buffers = []
    for sec, obj in sections.items():
        if hasattr(obj, "state_dict"):
            state = obj.state_dict()
            kinds = _layer_kinds(obj)
        else:
            state = {k: np.asarray(v, dtype=np.float64) for k, v in obj.items()}
            kinds = []
        records = []
        for name, arr in state.items():
            records.append({"name": name, "shape": list(arr.shape)})
            buffers.append((f"{sec}/{name}.npy", arr))
        manifest["sections"][sec] = {"params": records, "layer_kinds": kinds}
    with zipfile.ZipFile(path, "w") as zf:
        _write(zf, "manifest.json", json.dumps(manifest, indent=1, sort_keys=True).encode())
        for name, arr in buffers:
            bio = io.BytesIO()
            np.lib.format.write_array(bio, np.ascontiguousarray(arr, dtype=np.float64), allow_pickle=False)
            _write(zf, name, bio.getvalue())


def load(path):
    """Return ``(meta, sections)``; ``sections`` maps name -> ordered dict of arrays."""
    try:
        zf = zipfile.ZipFile(path)
    except (OSError, zipfile.BadZipFile) as err:
        raise CheckpointError(f"cannot open checkpoint {path}: {err}") from err
    with zf:
        manifest = json.loads(zf.read("manifest.json"))
        version = manifest.get("format_version")
        if version != FORMAT_VERSION:
            raise CheckpointError(f"unsupported checkpoint format version {version}")
        sections = {}
        for sec, info in manifest["sections"].items():
            state = {}
            for rec in info["params"]:
                arr = np.lib.format.read_array(io.BytesIO(zf.read(f"{sec}/{rec['name']}.npy")))
                if list(arr.shape) != rec["shape"]:
                    raise CheckpointError(f"{sec}/{rec['name']}: stored shape does not match manifest")
                state[rec["name"]] = arr
            sections[sec] = state
    return manifest["meta"], sections


def manifest(path):
    with zipfile.ZipFile(path) as zf:
        return json.loads(zf.read("manifest.json"))
