"""Read-only access to a disordyn artifact bundle (manifest + CSV files)."""

from __future__ import annotations

import json
import os
import re
from dataclasses import dataclass

import numpy as np


class MissingArtifactError(FileNotFoundError):
    """A figure referenced an artifact absent from the bundle."""

    def __init__(self, bundle: str, missing: list[str]):
        self.missing = list(missing)
        super().__init__(
            f"bundle {bundle} is missing required artifact(s): {', '.join(self.missing)}"
        )


_TIME_RE = re.compile(r"t_(-?\d+\.\d+)\.csv$")


@dataclass
class Bundle:
    root: str

    def __post_init__(self):
        manifest_path = os.path.join(self.root, "manifest.json")
        if not os.path.exists(manifest_path):
            raise MissingArtifactError(self.root, ["manifest.json"])
        with open(manifest_path) as fh:
            self.manifest = json.load(fh)
        self.files = self.manifest.get("files", {})

    def scenario(self) -> str:
        return self.manifest.get("scenario", "")

    def has(self, role: str) -> bool:
        return role in self.files

    def path(self, role: str) -> str:
        if role not in self.files:
            raise MissingArtifactError(self.root, [role])
        rel = self.files[role]
        if isinstance(rel, list):
            raise ValueError(f"role {role} holds a file list; use state_times/state_path")
        full = os.path.join(self.root, rel)
        if not os.path.exists(full):
            raise MissingArtifactError(self.root, [rel])
        return full

    def state_times(self, role: str) -> list[float]:
        """Output times available for a per-time state role (sorted)."""
        if role not in self.files:
            raise MissingArtifactError(self.root, [role])
        times = []
        for rel in self.files[role]:
            match = _TIME_RE.search(rel)
            if match:
                times.append(float(match.group(1)))
        return sorted(times)

    def state_path(self, role: str, time: float) -> str:
        rel = None
        for candidate in self.files.get(role, []):
            match = _TIME_RE.search(candidate)
            if match and abs(float(match.group(1)) - time) < 5e-7:
                rel = candidate
                break
        if rel is None:
            raise MissingArtifactError(self.root, [f"{role} at t={time}"])
        full = os.path.join(self.root, rel)
        if not os.path.exists(full):
            raise MissingArtifactError(self.root, [rel])
        return full

    def report(self) -> dict:
        with open(self.path("report")) as fh:
            return json.load(fh)

    def lattice_size(self) -> int:
        config = self.manifest.get("config", {})
        try:
            return int(config["lattice"]["n_sites"])
        except (KeyError, TypeError, ValueError):
            raise MissingArtifactError(self.root, ["config.lattice.n_sites in manifest"])


def read_density(path: str, n: int) -> np.ndarray:
    """Sparse j,jp,re,im rows -> dense n x n complex matrix.

    n comes from the bundle config: sub-cutoff elements are omitted from
    the CSV, so the matrix extent cannot be inferred from the rows.
    """
    js, jps, res, ims = [], [], [], []
    with open(path) as fh:
        next(fh)
        for line in fh:
            j, jp, re_part, im_part = line.rstrip("\n").split(",")
            js.append(int(j))
            jps.append(int(jp))
            res.append(float(re_part))
            ims.append(float(im_part))
    out = np.zeros((n, n), dtype=complex)
    out[js, jps] = np.array(res) + 1j * np.array(ims)
    return out


def _float_or_none(token: str):
    return float(token) if token else None


def read_purity(path: str) -> dict:
    cols = {"t": [], "p_ens": [], "p_me": [], "ratio": []}
    with open(path) as fh:
        next(fh)
        for line in fh:
            t, p_ens, p_me, ratio = line.rstrip("\n").split(",")
            cols["t"].append(float(t))
            cols["p_ens"].append(_float_or_none(p_ens))
            cols["p_me"].append(_float_or_none(p_me))
            cols["ratio"].append(_float_or_none(ratio))
    return cols


def read_momentum(path: str) -> dict:
    """Rows t,q,n_ens,n_me grouped by time."""
    blocks: dict[float, dict] = {}
    with open(path) as fh:
        next(fh)
        for line in fh:
            t, q, n_ens, n_me = line.rstrip("\n").split(",")
            block = blocks.setdefault(float(t), {"q": [], "n_ens": [], "n_me": []})
            block["q"].append(float(q))
            block["n_ens"].append(_float_or_none(n_ens))
            block["n_me"].append(_float_or_none(n_me))
    return blocks


def read_labelled_rows(path: str) -> dict:
    """CSV with a leading label column -> {label: {column: list}}."""
    out: dict[str, dict] = {}
    with open(path) as fh:
        header = next(fh).rstrip("\n").split(",")[1:]
        for line in fh:
            tokens = line.rstrip("\n").split(",")
            row = out.setdefault(tokens[0], {name: [] for name in header})
            for name, token in zip(header, tokens[1:]):
                row[name].append(_float_or_none(token))
    return out
