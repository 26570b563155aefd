"""
Functions that perform part of the computation of another function, usually from experiments.py
because the functionality is needed in multiple places.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np


def instance_name(problem_tag, topology_key, n):
    """Stable instance id, e.g. max_clique-2d-grid-4-n8"""
    return f"{problem_tag}-{topology_key}-n{n}"


def graph_name(topology_key, n):
    return f"{topology_key}-n{n}"


def run_rng(master_seed, instance, method):
    """Generator for one run.

    The stream depends on the master seed, the instance and the method only, so a
    run is reproducible on its own whatever else runs beside it.
    """
    key = [int(b) for b in f"{instance}/{method}".encode()]
    return np.random.default_rng(np.random.SeedSequence([int(master_seed), *key]))


def run_path(output_dir, instance, method, seed):
    return Path(output_dir) / "runs" / instance / method / f"seed-{seed}.json"


def trace_path(record_path):
    record_path = Path(record_path)
    return record_path.with_name(record_path.stem + ".trace.jsonl")


def checkpoint_path(record_path):
    record_path = Path(record_path)
    return record_path.with_name(record_path.stem + ".agent.npz")


def hpo_path(output_dir, method, instance, suffix=".json"):
    """HPO summary of one instance, or with ``suffix=".env"`` its winning config"""
    return Path(output_dir) / "hpo" / method / f"{instance}{suffix}"


def _default(value):
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (tuple, set)):
        return list(value)
    if isinstance(value, Path):
        return str(value)
    raise TypeError(f"{type(value).__name__} is not JSON serializable")


def dump_json(path, payload):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True, default=_default) + "\n")


def load_json(path):
    return json.loads(Path(path).read_text())


def dump_jsonl(path, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [json.dumps(row, sort_keys=True, default=_default) for row in rows]
    path.write_text("".join(line + "\n" for line in lines))


def load_jsonl(path):
    return [json.loads(line) for line in Path(path).read_text().splitlines() if line.strip()]


def write_if_changed(path, text):
    """Write ``text`` unless the file already holds exactly it; returns True on write"""
    path = Path(path)
    if path.exists() and path.read_text() == text:
        return False
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    return True
