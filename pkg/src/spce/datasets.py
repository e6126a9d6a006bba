"""Persistence of replica ensembles and surrogate artifacts.

An ensemble archive is a directory holding meta.json (shapes, domain,
provenance), lambdas.csv (the parameter design with a header row), and
values.bin (a 16-byte magic header followed by the replica tensor as
little-endian IEEE-754 binary64, row-major in (n, m, x) order).  Surrogates
are single JSON documents whose floats round-trip bit-faithfully.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .exceptions import ArchiveFormatError
from .joint_pce import JointPce, ParameterSpace
from .kle import FieldEnsemble
from .klpc import KlpcSurrogate
from .synthetic import make_rng

ENSEMBLE_MAGIC = b"SPCE-ENS\x00v1\x00\x00\x00\x00\x00"  # 16 bytes
SCHEMA_VERSION = 1

META_NAME = "meta.json"
LAMBDAS_NAME = "lambdas.csv"
VALUES_NAME = "values.bin"


@dataclass
class EnsembleArchive:
    """A replica training set: parameter design plus the value tensor."""

    lambdas: np.ndarray      # (N, d_param)
    values: np.ndarray       # (N, M, L_x)
    grid: np.ndarray         # (L_x,)
    param_space: ParameterSpace
    kind: str                # "scalar" or "field"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.lambdas = np.atleast_2d(np.asarray(self.lambdas, dtype=float))
        self.values = np.asarray(self.values, dtype=float)
        self.grid = np.asarray(self.grid, dtype=float).ravel()
        if self.values.ndim != 3:
            raise ArchiveFormatError("values must be a (N, M, L_x) tensor")
        if self.values.shape[0] != self.lambdas.shape[0]:
            raise ArchiveFormatError("values and lambdas disagree on N")
        if self.values.shape[2] != self.grid.size:
            raise ArchiveFormatError("values and grid disagree on L_x")
        if self.kind not in ("scalar", "field"):
            raise ArchiveFormatError(f"unknown ensemble kind {self.kind!r}")
        bad = np.argwhere(~np.isfinite(self.values))
        if bad.size:
            n, m, x = (int(v) for v in bad[0])
            raise ArchiveFormatError(
                f"non-finite value at (n={n}, m={m}, x={x})"
            )

    @property
    def n_param_samples(self) -> int:
        return self.values.shape[0]

    @property
    def n_replicas(self) -> int:
        return self.values.shape[1]

    @property
    def n_points(self) -> int:
        return self.values.shape[2]

    def field_ensemble(self) -> FieldEnsemble:
        return FieldEnsemble.from_replica_tensor(self.values, self.grid)


def write_ensemble(archive: EnsembleArchive, path) -> Path:
    """Write an archive directory; returns the directory path."""
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)

    meta = {
        "schema_version": SCHEMA_VERSION,
        "kind": archive.kind,
        "param_space": archive.param_space.to_dict(),
        "grid": [float(v) for v in archive.grid],
        "n_param_samples": archive.n_param_samples,
        "n_replicas": archive.n_replicas,
        "n_points": archive.n_points,
        **archive.meta,
    }
    (root / META_NAME).write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n",
                                  encoding="utf-8")

    with open(root / LAMBDAS_NAME, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(archive.param_space.names)
        for row in archive.lambdas:
            writer.writerow([repr(float(v)) for v in row])

    payload = np.ascontiguousarray(archive.values, dtype="<f8").tobytes()
    with open(root / VALUES_NAME, "wb") as fh:
        fh.write(ENSEMBLE_MAGIC)
        fh.write(payload)
    return root


def read_ensemble(path) -> EnsembleArchive:
    """Read an archive directory written by write_ensemble."""
    root = Path(path)
    meta_path = root / META_NAME
    if not meta_path.exists():
        raise FileNotFoundError(f"no ensemble archive at {root} (missing {META_NAME})")
    try:
        meta = json.loads(meta_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ArchiveFormatError(f"corrupt {META_NAME}: {exc}") from exc

    try:
        space = ParameterSpace.from_dict(meta["param_space"])
        kind = meta["kind"]
        grid = np.asarray(meta["grid"], dtype=float)
        n, m, lx = (int(meta[k]) for k in ("n_param_samples", "n_replicas", "n_points"))
    except (KeyError, ValueError, TypeError) as exc:
        raise ArchiveFormatError(f"incomplete {META_NAME}: {exc}") from exc

    with open(root / LAMBDAS_NAME, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows or tuple(rows[0]) != space.names:
        raise ArchiveFormatError(
            f"{LAMBDAS_NAME} header {rows[0] if rows else []} does not match "
            f"parameter names {list(space.names)}"
        )
    try:
        lambdas = np.array([[float(v) for v in row] for row in rows[1:]], dtype=float)
    except ValueError as exc:
        raise ArchiveFormatError(f"bad {LAMBDAS_NAME} entry: {exc}") from exc
    if lambdas.shape != (n, space.dim):
        raise ArchiveFormatError(
            f"{LAMBDAS_NAME} has shape {lambdas.shape}, expected ({n}, {space.dim})"
        )

    blob = (root / VALUES_NAME).read_bytes()
    if blob[: len(ENSEMBLE_MAGIC)] != ENSEMBLE_MAGIC:
        raise ArchiveFormatError(f"{VALUES_NAME} magic header mismatch")
    payload = blob[len(ENSEMBLE_MAGIC):]
    expected = n * m * lx * 8
    if len(payload) != expected:
        raise ArchiveFormatError(
            f"{VALUES_NAME} payload holds {len(payload)} bytes, expected {expected} "
            f"(= {n} x {m} x {lx} x 8)"
        )
    values = np.frombuffer(payload, dtype="<f8").reshape(n, m, lx).astype(float)

    extra = {k: v for k, v in meta.items()
             if k not in ("schema_version", "kind", "param_space", "grid",
                          "n_param_samples", "n_replicas", "n_points")}
    return EnsembleArchive(lambdas=lambdas, values=values, grid=grid,
                           param_space=space, kind=kind, meta=extra)


def split_train_test(archive: EnsembleArchive, fraction: float, seed: int
                     ) -> tuple[EnsembleArchive, EnsembleArchive]:
    """Split by parameter index so replicas travel with their lambda.

    ``fraction`` is the training share in (0, 1); the split is a seeded
    permutation of the parameter indices, deterministic under the seed.
    """
    if not 0.0 < fraction < 1.0:
        raise ValueError(f"fraction must lie in (0, 1), got {fraction}")
    n = archive.n_param_samples
    n_train = int(round(n * fraction))
    n_train = min(max(n_train, 1), n - 1)
    perm = make_rng(seed).permutation(n)
    train_idx = np.sort(perm[:n_train])
    test_idx = np.sort(perm[n_train:])

    def take(idx):
        return EnsembleArchive(
            lambdas=archive.lambdas[idx],
            values=archive.values[idx],
            grid=archive.grid,
            param_space=archive.param_space,
            kind=archive.kind,
            meta={**archive.meta, "split_of": archive.meta.get("dataset", "parent"),
                  "split_indices": [int(i) for i in idx]},
        )

    return take(train_idx), take(test_idx)


def save_surrogate(surrogate, path) -> Path:
    """Persist a JointPce or KlpcSurrogate as one JSON document."""
    if isinstance(surrogate, KlpcSurrogate):
        doc = {"schema_version": SCHEMA_VERSION, "kind": "klpc",
               **surrogate.to_dict()}
    elif isinstance(surrogate, JointPce):
        doc = {"schema_version": SCHEMA_VERSION, "kind": "joint_pce",
               **surrogate.to_dict()}
    else:
        raise TypeError(f"cannot save object of type {type(surrogate).__name__}")
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(doc, sort_keys=True) + "\n", encoding="utf-8")
    return out


def load_surrogate(path):
    """Load a surrogate JSON document; raises ArchiveFormatError when corrupt."""
    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(f"no surrogate file at {p}")
    try:
        doc = json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ArchiveFormatError(f"corrupt surrogate file {p}: {exc}") from exc
    kind = doc.get("kind")
    try:
        if kind == "joint_pce":
            return JointPce.from_dict(doc)
        if kind == "klpc":
            return KlpcSurrogate.from_dict(doc)
    except (KeyError, ValueError, TypeError) as exc:
        raise ArchiveFormatError(f"inconsistent surrogate file {p}: {exc}") from exc
    raise ArchiveFormatError(f"unknown surrogate kind {kind!r} in {p}")
