"""
Benchmark orchestration: instance generation, experiment runs and the random
hyperparameter search.

Runs are independent, so with more than one worker they are dispatched to a
process pool and gathered with asyncio; every finished run is written to its
own record file and to the database.
"""
from __future__ import annotations

import logging
from asyncio import gather, get_running_loop, run
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np
from django.conf import settings

from ansatz.utils import databases, helpers
from ansatz.utils.agent import PpoConfig
from ansatz.utils.configs import (
    HPO_METHODS,
    ExperimentConfig,
    dumps_config,
    load_method_configs,
    sample_ppo_overrides,
    sample_qaoa_depth,
)
from ansatz.utils.execution import RunTask, execute_run
from ansatz.utils.problems import (
    PROBLEMS,
    TOPOLOGIES,
    build_qubo,
    brute_force_extrema,
    dumps_graph,
    dumps_qubo,
    generate_graph,
    graph_spec,
    as_graph,
    topology_label,
)

logger = logging.getLogger(__name__)

INSTANCE_SIZES = (8, 12, 16)
HPO_BUDGET = 50
# Configs tuned at this size are reused for the same problem and topology at every size
TUNED_SIZE = 8
HPO_DEVIATION = (
    "Random search over the prior distributions replaces Bayesian optimization; "
    "search space and budget are unchanged."
)


def gen_instances(output_dir=None, sizes=INSTANCE_SIZES):
    """Write every topology x size graph and its three QUBO encodings, and store them.

    Returns the graph and QUBO file paths. Files that already hold the right
    content are left untouched, so reruns are idempotent.
    """
    output_dir = Path(output_dir or settings.ANSATZ_OUTPUT_ROOT)
    graph_files, qubo_files, rows = [], [], []
    for n in sizes:
        for topology in TOPOLOGIES:
            edges = generate_graph(graph_spec(topology, n))
            graph_path = output_dir / "instances" / "graphs" / f"{helpers.graph_name(topology, n)}.txt"
            helpers.write_if_changed(graph_path, dumps_graph(n, edges))
            graph_files.append(graph_path)

            graph = as_graph(n, edges)
            for problem in PROBLEMS:
                name = helpers.instance_name(problem, topology, n)
                qubo = build_qubo(graph, problem, name=name)
                qubo_path = output_dir / "instances" / "qubo" / f"{name}.qubo"
                helpers.write_if_changed(qubo_path, dumps_qubo(qubo))
                qubo_files.append(qubo_path)

                h_min, argmin, h_max = brute_force_extrema(qubo)
                rows.append({
                    "name": name,
                    "problem": problem,
                    "topology": topology,
                    "topology_label": topology_label(topology, n),
                    "n": n,
                    "edges": [list(edge) for edge in edges],
                    "qubo": databases.qubo_triplets(qubo),
                    "penalty": qubo.penalty,
                    "offset": qubo.offset,
                    "h_min": h_min,
                    "h_max": h_max,
                    "argmin": argmin,
                })
    databases.add_instances_to_db(rows)
    logger.info("Instances ready: %d graphs, %d QUBOs", len(graph_files), len(qubo_files))
    return graph_files, qubo_files


def instance_names(problems, topologies, sizes):
    return [
        helpers.instance_name(problem, topology, n)
        for n in sizes
        for problem in problems
        for topology in topologies
    ]


def make_task(name, method, configs, seed, checkpoint=None):
    row = databases.get_instance(name)
    meta = {"problem": row.problem, "topology": row.topology,
            "topology_label": row.topology_label, "n": row.n}
    return RunTask(method, databases.qubo_from_row(row), meta, row.h_min, row.h_max,
                   configs, seed, checkpoint)


def tuned_configs(output_dir, method, problem, topology):
    """Winning HPO config of the same problem and topology at TUNED_SIZE"""
    path = helpers.hpo_path(output_dir, method,
                            helpers.instance_name(problem, topology, TUNED_SIZE), ".env")
    if not path.exists():
        raise FileNotFoundError(f"No tuned config at {path}, run hpo --method {method} first")
    return load_method_configs(method, path)


async def execute_runs_parallel(tasks, workers):
    """Run every task in a process pool and gather the payloads in task order"""
    loop = get_running_loop()
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [loop.run_in_executor(pool, execute_run, task) for task in tasks]
        return await gather(*futures)


def execute_runs(tasks, workers=None):
    workers = workers or settings.ANSATZ_WORKERS
    if workers > 1 and len(tasks) > 1:
        return list(run(execute_runs_parallel(tasks, workers)))
    return [execute_run(task) for task in tasks]


def save_run_files(output_dir, payload, subdir=None):
    """Record file plus its JSON-lines episode trace"""
    base = Path(output_dir) / subdir if subdir else output_dir
    path = helpers.run_path(base, payload["instance"], payload["method"], payload["seed"])
    record = {key: value for key, value in payload.items() if key != "traces"}
    record["trace_file"] = helpers.trace_path(path).name
    helpers.dump_json(path, record)
    helpers.dump_jsonl(helpers.trace_path(path), payload["traces"])
    return path


def run_experiment(config: ExperimentConfig, workers=None, resume=False):
    """One record per (instance, seed) of the configured grid.

    With ``resume`` the runs already stored in the database are skipped and only
    the new payloads are returned.
    """
    grid = [(n, problem, topology) for n in config.sizes
            for problem in config.problems for topology in config.topologies]
    names = [helpers.instance_name(problem, topology, n) for n, problem, topology in grid]
    pending = None
    if resume:
        pending = set(databases.find_runs_not_in_db(names, config.method, config.seeds))

    tasks = []
    for name, (_, problem, topology) in zip(names, grid):
        seeds = [seed for seed in config.seeds if pending is None or (name, seed) in pending]
        if not seeds:
            continue
        if config.tuned:
            configs = tuned_configs(config.output_dir, config.method, problem, topology)
        else:
            configs = config.method_configs()
        for seed in seeds:
            checkpoint = None
            if config.method != "qaoa":
                checkpoint = str(helpers.checkpoint_path(
                    helpers.run_path(config.output_dir, name, config.method, seed)))
            tasks.append(make_task(name, config.method, configs, seed, checkpoint))
    logger.info("Running %s: %d runs over %d instances x %d seeds", config.method, len(tasks),
                len(names), len(config.seeds))

    payloads = execute_runs(tasks, workers)
    for payload in payloads:
        save_run_files(config.output_dir, payload)
    databases.save_runs_to_db(payloads)
    return payloads


def sample_trial_configs(method, rng, base_configs):
    """One configuration drawn from the search priors"""
    if method == "qaoa":
        return {"qaoa": replace(base_configs["qaoa"], p=sample_qaoa_depth(rng))}
    ppo = PpoConfig.for_mode("global", **{**base_configs["ppo"].as_dict(),
                                          **sample_ppo_overrides(rng)})
    return {"ppo": ppo, "env": base_configs["env"]}


def hpo_random_search(method, names, budget=HPO_BUDGET, seed=0, output_dir=None,
                      config_path=None, workers=None):
    """Best of ``budget`` sampled configurations for each instance.

    Each trial is a fresh run seeded by its trial index; the configuration whose
    run reaches the highest reward wins. Returns ``{instance: summary}``.
    """
    if method not in HPO_METHODS:
        raise ValueError(f"Hyperparameter search supports {HPO_METHODS}, got {method!r}")
    if budget < 1:
        raise ValueError(f"The search budget must be at least 1, got {budget}")
    output_dir = Path(output_dir or settings.ANSATZ_OUTPUT_ROOT)
    base_configs = load_method_configs(method, config_path)

    rng = np.random.default_rng(seed)
    trial_configs = [sample_trial_configs(method, rng, base_configs) for _ in range(budget)]

    summaries = {}
    for name in names:
        tasks = [make_task(name, method, configs, trial)
                 for trial, configs in enumerate(trial_configs)]
        payloads = execute_runs(tasks, workers)
        for payload in payloads:
            save_run_files(output_dir, payload, subdir="hpo")
        databases.save_runs_to_db(payloads, hpo=True)

        trials = [
            {"trial": payload["seed"], "config": payload["config"],
             "best_reward": payload["best_reward"],
             "approximation_ratio": payload["approximation_ratio"]}
            for payload in payloads
        ]
        best = max(trials, key=lambda trial: trial["best_reward"])
        summary = {
            "instance": name,
            "method": method,
            "search": "random",
            "deviation": HPO_DEVIATION,
            "budget": budget,
            "seed": seed,
            "best": best,
            "trials": trials,
        }
        helpers.dump_json(helpers.hpo_path(output_dir, method, name), summary)
        helpers.write_if_changed(helpers.hpo_path(output_dir, method, name, ".env"),
                                 dumps_config(trial_configs[best["trial"]]))
        logger.info("HPO %s %s: trial %d best reward %.4f", method, name, best["trial"],
                    best["best_reward"])
        summaries[name] = summary
    return summaries

