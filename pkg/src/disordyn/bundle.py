"""Artifact bundle on disk: CSV numeric files, manifest, report.

Numeric files (CSV and report.json) are bitwise reproducible for a given
config; manifest.json additionally records wall-clock and environment
metadata and is excluded from the bitwise contract. Floats are written
with repr (shortest round-trip), complex matrix elements as two real
columns, one row per element with |value| > 1e-14.
"""

from __future__ import annotations

import json
import os
from datetime import datetime, timezone

import numpy as np

from .model import DensityMatrix

DENSITY_CUTOFF = 1e-14


def _fmt(x) -> str:
    return repr(float(x))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if np.isfinite(x) else repr(x)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def write_json(path: str, obj) -> None:
    with open(path, "w") as fh:
        json.dump(_jsonable(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")


def time_tag(t: float) -> str:
    return f"t_{t:.6f}"


def write_density_csv(path: str, rho: DensityMatrix) -> None:
    r = rho.elements
    with open(path, "w") as fh:
        fh.write("j,jp,re,im\n")
        for j in range(r.shape[0]):
            for jp in range(r.shape[1]):
                v = r[j, jp]
                if abs(v) > DENSITY_CUTOFF:
                    fh.write(f"{j},{jp},{_fmt(v.real)},{_fmt(v.imag)}\n")


def read_density_csv(path: str, n: int) -> np.ndarray:
    out = np.zeros((n, n), dtype=complex)
    with open(path) as fh:
        next(fh)
        for line in fh:
            j, jp, re, im = line.split(",")
            out[int(j), int(jp)] = float(re) + 1j * float(im)
    return out


def write_purity_csv(path: str, times, p_ens=None, p_me=None, ratio=None) -> None:
    cols = [p_ens, p_me, ratio]
    with open(path, "w") as fh:
        fh.write("t,p_ens,p_me,ratio\n")
        for i, t in enumerate(times):
            row = [_fmt(t)]
            for col in cols:
                row.append(_fmt(col[i]) if col is not None else "")
            fh.write(",".join(row) + "\n")


def write_momentum_csv(path: str, blocks) -> None:
    """blocks: iterable of (t, q_grid, n_ens or None, n_me or None)."""
    with open(path, "w") as fh:
        fh.write("t,q,n_ens,n_me\n")
        for t, q_grid, n_ens, n_me in blocks:
            for i, q in enumerate(q_grid):
                row = [
                    _fmt(t),
                    _fmt(q),
                    _fmt(n_ens[i]) if n_ens is not None else "",
                    _fmt(n_me[i]) if n_me is not None else "",
                ]
                fh.write(",".join(row) + "\n")


def write_localization_csv(path: str, rows) -> None:
    """rows: iterable of (label, dj, c, f, f_boonpan or None)."""
    with open(path, "w") as fh:
        fh.write("label,dj,C,F,F_boonpan\n")
        for label, dj, c, f, fb in rows:
            tail = _fmt(fb) if fb is not None else ""
            fh.write(f"{label},{int(dj)},{_fmt(c)},{_fmt(f)},{tail}\n")


def write_gq_csv(path: str, rows) -> None:
    """rows: iterable of (label, q, g)."""
    with open(path, "w") as fh:
        fh.write("label,q,G\n")
        for label, q, g in rows:
            fh.write(f"{label},{_fmt(q)},{_fmt(g)}\n")


def write_tmax_csv(path: str, rows) -> None:
    """rows: iterable of (label, strength, tmax, purity_loss_at_tmax)."""
    with open(path, "w") as fh:
        fh.write("label,strength,tmax,purity_loss_at_tmax\n")
        for label, strength, tmax, loss in rows:
            fh.write(f"{label},{_fmt(strength)},{_fmt(tmax)},{_fmt(loss)}\n")


def write_ratio_csv(path: str, offsets, observed, expected) -> None:
    with open(path, "w") as fh:
        fh.write("dx,observed,expected\n")
        for i, dx in enumerate(offsets):
            obs = _fmt(observed[i]) if observed is not None else ""
            fh.write(f"{_fmt(dx)},{obs},{_fmt(expected[i])}\n")


class BundleWriter:
    """Collects files and pipeline statuses for one scenario run."""

    def __init__(self, out_dir: str):
        self.out_dir = out_dir
        os.makedirs(out_dir, exist_ok=True)
        self.files: dict = {}
        self.pipelines: dict = {}

    def path(self, *parts: str) -> str:
        full = os.path.join(self.out_dir, *parts)
        os.makedirs(os.path.dirname(full), exist_ok=True)
        return full

    def register(self, role: str, relpath: str, append: bool = False) -> None:
        if append:
            self.files.setdefault(role, []).append(relpath)
        else:
            self.files[role] = relpath

    def pipeline_ok(self, name: str) -> None:
        self.pipelines[name] = {"status": "ok", "error": None}

    def pipeline_failed(self, name: str, error: Exception) -> None:
        self.pipelines[name] = {
            "status": "error",
            "error": f"{type(error).__name__}: {error}",
        }

    def write_manifest(self, config, threads: int, backend: str, version: str) -> None:
        manifest = {
            "schema": "disordyn-bundle/1",
            "code_version": version,
            "created_utc": datetime.now(timezone.utc).isoformat(),
            "scenario": config.scenario,
            "backend": backend,
            "threads": threads,
            "config": config.to_dict(),
            "pipelines": self.pipelines,
            "files": self.files,
        }
        write_json(os.path.join(self.out_dir, "manifest.json"), manifest)

    def write_report(self, report: dict) -> None:
        write_json(os.path.join(self.out_dir, "report.json"), report)
        self.register("report", "report.json")
