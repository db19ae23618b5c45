"""Binary grid files (``.bcf``).

Layout: one ASCII header line of space-separated ``key=value`` tokens led by
the magic ``BCF1``, a newline, then ``n*n`` little-endian float64 values
(``kind=field``) or uint8 codes (``labels``, ``edges``, ``mask``), row-major
with row 0 at minimum y. Floats in the header are written with ``repr`` so
they round-trip exactly.
"""

from __future__ import annotations

import math
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .model import EdgeMap, GridSpec, LabelField, ScalarField

MAGIC = "BCF1"
KINDS = ("field", "labels", "edges", "mask")
REQUIRED = ("n", "eps", "f0", "fB", "fF", "gamma", "mu", "e_p", "kind")


class FileFormatError(ValueError):
    pass


@dataclass
class GridFile:
    header: dict
    data: np.ndarray
    extra: dict = field(default_factory=dict)

    @property
    def kind(self) -> str:
        return self.header["kind"]

    @property
    def spec(self) -> GridSpec:
        return GridSpec(self.header["eps"], self.header["n"])


def _fmt(v) -> str:
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    s = str(v)
    if not s or any(c.isspace() or c == "=" for c in s):
        raise FileFormatError(f"header value {s!r} contains whitespace or '='")
    return s


def _parse(key: str, s: str):
    if key in ("n",):
        return int(s)
    if key in ("kind", "source"):
        return s
    try:
        return float(s)
    except ValueError:
        return s


def atomic_write(path, payload: bytes):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_grid(path, data: np.ndarray, *, n, eps, f0, fB, fF, gamma, mu, e_p, kind, **extra):
    if kind not in KINDS:
        raise FileFormatError(f"unknown kind {kind!r}")
    data = np.asarray(data)
    if data.shape != (n, n):
        raise FileFormatError(f"data shape {data.shape} does not match n={n}")
    header = dict(n=int(n), eps=float(eps), f0=float(f0), fB=float(fB), fF=float(fF),
                  gamma=float(gamma), mu=float(mu), e_p=float(e_p), kind=kind)
    header.update(extra)
    line = " ".join([MAGIC] + [f"{k}={_fmt(v)}" for k, v in header.items()])
    if kind == "field":
        payload = np.ascontiguousarray(data, dtype="<f8").tobytes()
    else:
        payload = np.ascontiguousarray(data, dtype=np.uint8).tobytes()
    atomic_write(path, line.encode("ascii") + b"\n" + payload)


def read_grid(path) -> GridFile:
    raw = Path(path).read_bytes()
    nl = raw.find(b"\n")
    if nl < 0:
        raise FileFormatError(f"{path}: missing header line")
    try:
        tokens = raw[:nl].decode("ascii").split()
    except UnicodeDecodeError as exc:
        raise FileFormatError(f"{path}: header is not ASCII") from exc
    if not tokens or tokens[0] != MAGIC:
        raise FileFormatError(f"{path}: bad magic {tokens[:1]!r}")
    header = {}
    for tok in tokens[1:]:
        key, sep, val = tok.partition("=")
        if not sep:
            raise FileFormatError(f"{path}: malformed header token {tok!r}")
        header[key] = _parse(key, val)
    missing = [k for k in REQUIRED if k not in header]
    if missing:
        raise FileFormatError(f"{path}: header lacks {missing}")
    if header["kind"] not in KINDS:
        raise FileFormatError(f"{path}: unknown kind {header['kind']!r}")
    n = header["n"]
    body = raw[nl + 1:]
    dtype = np.dtype("<f8") if header["kind"] == "field" else np.dtype(np.uint8)
    if len(body) != n * n * dtype.itemsize:
        raise FileFormatError(f"{path}: payload has {len(body)} bytes, expected {n * n * dtype.itemsize}")
    data = np.frombuffer(body, dtype=dtype).reshape(n, n).astype(dtype.newbyteorder("="))
    extra = {k: v for k, v in header.items() if k not in REQUIRED}
    return GridFile(header, data, extra)


def _common(spec: GridSpec, params) -> dict:
    return dict(n=spec.n, eps=spec.eps, mu=params.mu, e_p=params.e_p)


def write_field(path, fld: ScalarField, params):
    write_grid(path, fld.values, f0=fld.f0, fB=fld.fB, fF=fld.fF, gamma=fld.gamma,
               kind="field", **_common(fld.spec, params))


def read_field(path) -> ScalarField:
    gf = _expect(read_grid(path), "field", path)
    h = gf.header
    return ScalarField(gf.spec, gf.data, h["f0"], h["fB"], h["fF"], h["gamma"])


def events_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".events.bcf")


def write_labels(path, lf: LabelField, params, gamma: float = 0.5):
    """Write labels and, alongside, a float file with the event anomalies."""
    extent = lf.ff - lf.f0
    fB, fF = (extent, 0.0) if extent < 0 else (0.0, extent)
    common = _common(lf.spec, params)
    write_grid(path, lf.labels, f0=lf.f0, fB=fB, fF=fF, gamma=gamma, kind="labels",
               ff=lf.ff, **common)
    write_grid(events_path(path), lf.event_anomaly, f0=lf.f0, fB=fB, fF=fF, gamma=gamma,
               kind="field", ff=lf.ff, source="events", **common)


def read_labels(path) -> LabelField:
    gf = _expect(read_grid(path), "labels", path)
    h = gf.header
    ff = h.get("ff", h["f0"] + h["fB"] + h["fF"])
    ev_path = events_path(path)
    if ev_path.exists():
        events = read_grid(ev_path).data
    else:
        events = np.full(gf.data.shape, np.nan)
    return LabelField(gf.spec, gf.data, events, h["f0"], ff)


def write_edges(path, em: EdgeMap, params, *, f0=0.0, fB=0.0, fF=0.0, gamma=0.5):
    write_grid(path, em.mask, f0=f0, fB=fB, fF=fF, gamma=gamma, kind="edges",
               sigma=em.sigma, **_common(em.spec, params))


def read_edges(path) -> EdgeMap:
    gf = _expect(read_grid(path), "edges", path)
    return EdgeMap(gf.spec, gf.data.astype(bool), gf.header.get("sigma", math.nan))


def write_mask(path, spec: GridSpec, mask, params, *, f0=0.0, fB=0.0, fF=0.0, gamma=0.5, **extra):
    write_grid(path, np.asarray(mask, bool), f0=f0, fB=fB, fF=fF, gamma=gamma, kind="mask",
               **extra, **_common(spec, params))


def read_mask(path) -> tuple[GridSpec, np.ndarray]:
    gf = _expect(read_grid(path), "mask", path)
    return gf.spec, gf.data.astype(bool)


def _expect(gf: GridFile, kind: str, path) -> GridFile:
    if gf.kind != kind:
        raise FileFormatError(f"{path}: expected kind={kind}, found kind={gf.kind}")
    return gf


def write_csv(path, data: np.ndarray, spec: GridSpec):
    """Long-format CSV: i, j, X, Y, value."""
    X, Y = spec.offsets()
    ii, jj = np.indices(spec.shape)
    table = np.column_stack([ii.ravel(), jj.ravel(), X.ravel(), Y.ravel(),
                             np.asarray(data, float).ravel()])
    lines = ["i,j,X,Y,value"]
    lines += [f"{int(r[0])},{int(r[1])},{float(r[2])!r},{float(r[3])!r},{float(r[4])!r}"
              for r in table]
    atomic_write(path, ("\n".join(lines) + "\n").encode())
