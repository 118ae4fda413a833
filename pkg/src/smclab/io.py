"""File formats: model, tree and hierarchy documents in JSON; result tables in CSV or JSON.

Model document::

    {
      "schema_version": 1,
      "levels": 3,
      "spaces": [2, {"size": 3, "labels": ["a", "b", "c"]}, 2],
      "mu0": [0.5, 0.5],
      "g": [[1.0, 2.0], [1.0, 1.0, 0.5]],
      "kernels": [[[0.5, 0.5, 0.0], [0.0, 0.5, 0.5]],
                  [[1.0, 0.0], [0.5, 0.5], [0.0, 1.0]]]
    }

``levels`` counts ``mu_0..mu_n`` so there are ``levels - 1`` potentials and
kernels. Tree documents carry ``parents`` (one integer list per step) and
``masses`` (one list per level). Hierarchy documents carry ``blocks``, the
state-to-block map of every level.
"""
from __future__ import annotations

import csv
import io as _io
import json
import math
import sys
from pathlib import Path

import numpy as np

from .errors import ConfigError, ModelError
from .fk import PROB_TOL, FkModel
from .local import LocalModel, PartitionHierarchy
from .tree import TreeModel

SCHEMA_VERSION = 1
_DECODER = json.JSONDecoder()


# --------------------------------------------------------------------------
# locating fields


def _index_positions(text: str) -> dict:
    """Map every JSON path (tuple of keys/indices) to its character offset."""
    pos = {}

    def ws(i):
        while i < len(text) and text[i] in " \t\r\n":
            i += 1
        return i

    def value(i, path):
        i = ws(i)
        pos[path] = i
        c = text[i]
        if c == "{":
            i = ws(i + 1)
            if text[i] == "}":
                return i + 1
            while True:
                key, i = _DECODER.raw_decode(text, ws(i))
                i = ws(i)
                i = value(i + 1, path + (key,))
                i = ws(i)
                if text[i] == "}":
                    return i + 1
                i += 1
        if c == "[":
            i = ws(i + 1)
            if text[i] == "]":
                return i + 1
            k = 0
            while True:
                i = ws(value(i, path + (k,)))
                k += 1
                if text[i] == "]":
                    return i + 1
                i += 1
        _, end = _DECODER.raw_decode(text, i)
        return end

    value(0, ())
    return pos


class _Doc:
    """Parsed JSON plus a lookup from field paths to source lines."""

    def __init__(self, text: str, source: str):
        self.source = source
        try:
            self.data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{source}:{exc.lineno}:{exc.colno}: invalid JSON: {exc.msg}") from None
        self._text = text
        self._pos = None

    def line(self, path) -> int:
        if self._pos is None:
            self._pos = _index_positions(self._text)
        path = tuple(path)
        while path and path not in self._pos:
            path = path[:-1]
        return self._text.count("\n", 0, self._pos.get(path, 0)) + 1

    def fail(self, path, msg):
        where = "".join(f"[{p}]" if isinstance(p, int) else f".{p}" for p in path).lstrip(".")
        raise ModelError(f"{self.source}:{self.line(path)}: {where or '<root>'}: {msg}")

    def get(self, key, kind=None):
        if not isinstance(self.data, dict):
            self.fail((), "top level must be an object")
        if key not in self.data:
            self.fail((), f"missing field '{key}'")
        val = self.data[key]
        if kind is not None and not isinstance(val, kind):
            self.fail((key,), f"expected {kind.__name__ if isinstance(kind, type) else 'list'}")
        return val

    def vector(self, path, val, size=None, integer=False):
        if not isinstance(val, list):
            self.fail(path, "expected a list of numbers")
        for i, x in enumerate(val):
            ok = isinstance(x, int) if integer else isinstance(x, (int, float))
            if isinstance(x, bool) or not ok or (not integer and not math.isfinite(x)):
                self.fail(path + (i,), f"expected {'an integer' if integer else 'a finite number'}, got {x!r}")
        if size is not None and len(val) != size:
            self.fail(path, f"expected {size} entries, got {len(val)}")
        return np.array(val, dtype=np.int64 if integer else np.float64)


def _load_text(path) -> tuple:
    p = Path(path)
    try:
        return p.read_text(), str(p)
    except OSError as exc:
        raise ConfigError(f"cannot read {p}: {exc.strerror}") from None


def _check_version(doc: _Doc):
    if isinstance(doc.data, dict) and "schema_version" in doc.data and doc.data["schema_version"] != SCHEMA_VERSION:
        doc.fail(("schema_version",), f"unsupported schema_version {doc.data['schema_version']!r}")


def parse_model(text: str, source: str = "<model>") -> FkModel:
    doc = _Doc(text, source)
    _check_version(doc)
    levels = doc.get("levels", int)
    if levels < 1:
        doc.fail(("levels",), "need at least one level")
    spaces = doc.get("spaces", list)
    if len(spaces) != levels:
        doc.fail(("spaces",), f"expected {levels} entries, got {len(spaces)}")
    sizes, labels = [], []
    for k, s in enumerate(spaces):
        if isinstance(s, dict):
            size = s.get("size")
            lab = s.get("labels")
        else:
            size, lab = s, None
        if isinstance(size, bool) or not isinstance(size, int) or size < 1:
            doc.fail(("spaces", k), "space size must be a positive integer")
        if lab is not None and (not isinstance(lab, list) or len(lab) != size):
            doc.fail(("spaces", k, "labels"), f"expected {size} labels")
        sizes.append(size)
        labels.append(lab if lab is not None else [str(i) for i in range(size)])
    mu0 = doc.vector(("mu0",), doc.get("mu0"), sizes[0])
    if np.any(mu0 < 0) or abs(mu0.sum() - 1.0) > PROB_TOL:
        doc.fail(("mu0",), f"must be a probability vector (sum {float(mu0.sum())!r})")
    g_raw = doc.get("g", list)
    k_raw = doc.get("kernels", list)
    if len(g_raw) != levels - 1:
        doc.fail(("g",), f"expected {levels - 1} potentials, got {len(g_raw)}")
    if len(k_raw) != levels - 1:
        doc.fail(("kernels",), f"expected {levels - 1} kernels, got {len(k_raw)}")
    g, kernels = [], []
    for k in range(levels - 1):
        gk = doc.vector(("g", k), g_raw[k], sizes[k])
        if np.any(gk <= 0):
            doc.fail(("g", k, int(np.argmin(gk))), "potentials must be > 0")
        g.append(gk)
        rows = k_raw[k]
        if not isinstance(rows, list) or len(rows) != sizes[k]:
            doc.fail(("kernels", k), f"expected {sizes[k]} rows")
        K = np.empty((sizes[k], sizes[k + 1]))
        for i, row in enumerate(rows):
            K[i] = doc.vector(("kernels", k, i), row, sizes[k + 1])
            if np.any(K[i] < 0):
                doc.fail(("kernels", k, i), "negative transition probability")
            if abs(K[i].sum() - 1.0) > PROB_TOL:
                doc.fail(("kernels", k, i), f"row sums to {float(K[i].sum())!r}, not 1")
        kernels.append(K)
    return FkModel(mu0=mu0, g=g, kernels=kernels, labels=labels)


def parse_tree(text: str, source: str = "<tree>") -> TreeModel:
    doc = _Doc(text, source)
    _check_version(doc)
    masses_raw = doc.get("masses", list)
    parents_raw = doc.get("parents", list)
    if len(parents_raw) != len(masses_raw) - 1:
        doc.fail(("parents",), f"expected {len(masses_raw) - 1} parent lists, got {len(parents_raw)}")
    masses = [doc.vector(("masses", k), m) for k, m in enumerate(masses_raw)]
    parents = [doc.vector(("parents", k), p, integer=True) for k, p in enumerate(parents_raw)]
    try:
        return TreeModel.from_masses(parents, masses)
    except ModelError as exc:
        doc.fail(("parents",), str(exc))


def parse_hierarchy(text: str, source: str = "<hierarchy>") -> PartitionHierarchy:
    doc = _Doc(text, source)
    _check_version(doc)
    raw = doc.get("blocks", list)
    blocks = [doc.vector(("blocks", k), b, integer=True) for k, b in enumerate(raw)]
    try:
        return PartitionHierarchy(tuple(blocks))
    except ModelError as exc:
        doc.fail(("blocks",), str(exc))


def load_model(path) -> FkModel:
    return parse_model(*_load_text(path))


def load_tree(path) -> TreeModel:
    return parse_tree(*_load_text(path))


def load_hierarchy(path) -> PartitionHierarchy:
    return parse_hierarchy(*_load_text(path))


def load_local_model(model_path, hierarchy_path) -> LocalModel:
    return LocalModel(load_model(model_path), load_hierarchy(hierarchy_path))


def model_to_json(model: FkModel) -> str:
    spaces = list(model.sizes) if model.labels is None else [
        {"size": s, "labels": list(lab)} for s, lab in zip(model.sizes, model.labels)]
    doc = {"schema_version": SCHEMA_VERSION, "levels": model.n + 1, "spaces": spaces,
           "mu0": model.mu0.tolist(), "g": [x.tolist() for x in model.g],
           "kernels": [K.tolist() for K in model.kernels]}
    return json.dumps(doc, indent=1)


def hierarchy_to_json(h: PartitionHierarchy) -> str:
    return json.dumps({"schema_version": SCHEMA_VERSION, "blocks": [b.tolist() for b in h.blocks]})


# --------------------------------------------------------------------------
# result tables


def _plain(v):
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, np.bool_):
        return bool(v)
    return v


def _cell(v) -> str:
    v = _plain(v)
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _columns(rows):
    cols = ["schema_version"]
    for r in rows:
        for k in r:
            if k not in cols:
                cols.append(k)
    return cols


def format_rows(rows, fmt: str = "csv") -> str:
    """Serialize rows (list of dicts); column order follows first appearance."""
    rows = [dict(r) for r in rows]
    if fmt == "json":
        clean = [{k: _plain(v) for k, v in r.items()} for r in rows]
        return json.dumps({"schema_version": SCHEMA_VERSION, "rows": clean}, indent=1, allow_nan=True) + "\n"
    if fmt != "csv":
        raise ConfigError(f"unknown format {fmt!r}")
    buf = _io.StringIO()
    cols = _columns(rows)
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in rows:
        r = {"schema_version": SCHEMA_VERSION, **r}
        w.writerow([_cell(r.get(c)) for c in cols])
    return buf.getvalue()


def _parse_cell(s: str):
    if s == "":
        return None
    if s in ("true", "false"):
        return s == "true"
    try:
        return int(s)
    except ValueError:
        pass
    try:
        return float(s)
    except ValueError:
        return s


def parse_rows(text: str, fmt: str = "csv") -> list:
    """Inverse of :func:`format_rows`; checks the schema version."""
    if fmt == "json":
        doc = json.loads(text)
        if doc.get("schema_version") != SCHEMA_VERSION:
            raise ConfigError(f"unsupported schema_version {doc.get('schema_version')!r}")
        return doc["rows"]
    reader = csv.DictReader(_io.StringIO(text))
    rows = []
    for line, r in enumerate(reader, start=2):
        if r.get("schema_version") != str(SCHEMA_VERSION):
            raise ConfigError(f"line {line}: unsupported schema_version {r.get('schema_version')!r}")
        rows.append({k: _parse_cell(v) for k, v in r.items() if k != "schema_version"})
    return rows


def write_rows(rows, out, fmt: str = "csv", sidecar: dict | None = None):
    """Write rows to ``out`` (path or ``None`` for stdout); sidecar goes to ``<out>.meta.json``."""
    text = format_rows(rows, fmt)
    if out is None or str(out) == "-":
        sys.stdout.write(text)
        return
    p = Path(out)
    p.write_text(text)
    if sidecar is not None:
        meta = {"schema_version": SCHEMA_VERSION, **{k: _plain(v) for k, v in sidecar.items()}}
        Path(str(p) + ".meta.json").write_text(json.dumps(meta, indent=1, default=str) + "\n")
