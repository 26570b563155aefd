"""
Tables and figures built from run record files.

The report reads ``runs/<instance>/<method>/seed-<k>.json`` only, so it works on
a copied output directory without the database.
"""
from __future__ import annotations

import logging
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import pandas as pd  # noqa: E402

from ansatz.utils.baseline import CENSUS_BASIS  # noqa: E402
from ansatz.utils.configs import METHODS  # noqa: E402
from ansatz.utils.helpers import load_json  # noqa: E402

logger = logging.getLogger(__name__)

GROUP_KEYS = ["problem", "topology", "topology_label", "n", "method"]
SUMMARY_FILE = "approximation_ratio.csv"
COMPOSITION_FILE = "composition.csv"


def load_records(output_dir, methods=None, sizes=None) -> pd.DataFrame:
    """One row per run record; raises when nothing matches the filters"""
    if methods is not None and not list(methods):
        raise ValueError("The method filter is empty")
    rows = []
    for path in sorted(Path(output_dir).glob("runs/*/*/seed-*.json")):
        record = load_json(path)
        if methods is not None and record["method"] not in methods:
            continue
        if sizes is not None and record["n"] not in sizes:
            continue
        composition = record["composition"]
        row = {key: record[key] for key in (*GROUP_KEYS, "instance", "seed")}
        row.update({
            "approximation_ratio": record["approximation_ratio"],
            "approximation_ratio_raw": record["approximation_ratio_raw"],
            "gate_count": composition["gate_count"],
            "depth": composition["depth"],
            "depth_cx": composition["depth_cx"],
            "wall_time": record["wall_time"],
        })
        for label in CENSUS_BASIS:
            row[f"fraction_{label}"] = composition["fractions"].get(label, 0.0)
        rows.append(row)
    if not rows:
        raise ValueError(f"No run records under {output_dir} match the filters")
    return pd.DataFrame(rows)


def summary_table(records: pd.DataFrame) -> pd.DataFrame:
    """Mean and sample std of the approximation ratio per instance and method.

    ``beats_qaoa`` marks a learned method whose mean is above the QAOA mean on the
    same instance; ``is_best`` marks the highest mean of each instance.
    """
    table = (
        records.groupby(GROUP_KEYS)["approximation_ratio"]
        .agg(mean="mean", std=lambda values: values.std(ddof=1), runs="count")
        .reset_index()
    )
    instance_keys = ["problem", "topology", "n"]
    qaoa = table[table["method"] == "qaoa"].set_index(instance_keys)["mean"]
    qaoa_mean = table.set_index(instance_keys).index.map(lambda key: qaoa.get(key, float("nan")))
    table["beats_qaoa"] = (table["method"] != "qaoa") & (table["mean"].to_numpy() > qaoa_mean.to_numpy())
    table["is_best"] = table["mean"] == table.groupby(instance_keys)["mean"].transform("max")
    return table.sort_values(["n", "problem", "topology", "method"]).reset_index(drop=True)


def composition_table(records: pd.DataFrame) -> pd.DataFrame:
    """Gate count, depth and gate-type fractions per method and size"""
    fractions = [f"fraction_{label}" for label in CENSUS_BASIS]
    grouped = records.groupby(["method", "n"])
    table = grouped[["gate_count", "depth", "depth_cx"]].agg(["mean", lambda v: v.std(ddof=1)])
    table.columns = [f"{column}_{'mean' if stat == 'mean' else 'std'}" for column, stat in table.columns]
    table = table.join(grouped[fractions].mean())
    return table.reset_index()


def _ordered_methods(table):
    return [method for method in METHODS if method in set(table["method"])]


def plot_gate_count_depth(composition: pd.DataFrame, path) -> Path:
    """Bars of mean gate count and depth per method for each size, with std error bars"""
    sizes = sorted(composition["n"].unique())
    methods = _ordered_methods(composition)
    figure, axes = plt.subplots(1, 2, figsize=(10, 4))
    width = 0.8 / len(methods)
    for ax, metric in zip(axes, ("gate_count", "depth")):
        for offset, method in enumerate(methods):
            rows = composition[composition["method"] == method].set_index("n").reindex(sizes)
            positions = [i + offset * width for i in range(len(sizes))]
            ax.bar(positions, rows[f"{metric}_mean"], width, yerr=rows[f"{metric}_std"].fillna(0),
                   capsize=3, label=method)
        ax.set_xticks([i + width * (len(methods) - 1) / 2 for i in range(len(sizes))])
        ax.set_xticklabels([f"n={n}" for n in sizes])
        ax.set_title(metric.replace("_", " "))
    axes[0].legend()
    figure.tight_layout()
    figure.savefig(path, format="svg")
    plt.close(figure)
    return Path(path)


def plot_gate_usage(composition: pd.DataFrame, path) -> Path:
    """Stacked percentage of each gate type per method and size"""
    labels = [f"{method}\nn={n}" for method, n in zip(composition["method"], composition["n"])]
    figure, ax = plt.subplots(figsize=(max(6, len(labels) * 1.2), 4))
    bottom = pd.Series(0.0, index=composition.index)
    for gate in CENSUS_BASIS:
        share = composition[f"fraction_{gate}"] * 100
        ax.bar(labels, share, bottom=bottom, label=gate)
        bottom += share
    ax.set_ylabel("% of total gate count")
    ax.legend(loc="upper right")
    figure.tight_layout()
    figure.savefig(path, format="svg")
    plt.close(figure)
    return Path(path)


def report(output_dir, methods=None, sizes=None) -> dict:
    """Write the CSV tables and SVG figures under ``<output_dir>/reports``"""
    records = load_records(output_dir, methods, sizes)
    report_dir = Path(output_dir) / "reports"
    report_dir.mkdir(parents=True, exist_ok=True)

    summary = summary_table(records)
    composition = composition_table(records)
    paths = {
        "summary": report_dir / SUMMARY_FILE,
        "composition": report_dir / COMPOSITION_FILE,
        "runs": report_dir / "runs.csv",
    }
    summary.to_csv(paths["summary"], index=False)
    composition.to_csv(paths["composition"], index=False)
    records.to_csv(paths["runs"], index=False)
    paths["gate_count_depth"] = plot_gate_count_depth(composition, report_dir / "gate_count_depth.svg")
    paths["gate_usage"] = plot_gate_usage(composition, report_dir / "gate_usage.svg")
    for name, path in paths.items():
        logger.info("Wrote %s to %s", name, path)
    return paths
