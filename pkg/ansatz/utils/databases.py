"""Functions that perform computation on the database"""
from __future__ import annotations

import logging

import numpy as np

from ansatz.models import ProblemInstance, RunRecord
from ansatz.utils.exceptions import MissingInstanceError
from ansatz.utils.problems import QuboInstance

logger = logging.getLogger(__name__)


def qubo_triplets(qubo):
    return [[int(i), int(j), float(qubo.q[i, j])] for i, j in zip(*np.nonzero(qubo.q))]


def qubo_from_row(row):
    """Rebuild the QuboInstance stored in a ProblemInstance row"""
    q = np.zeros((row.n, row.n))
    for i, j, value in row.qubo:
        q[i, j] = value
    return QuboInstance(row.n, q, row.problem, penalty=row.penalty, offset=row.offset,
                        name=row.name)


def add_instances_to_db(instance_rows):
    """Add instances to database, skipping names already present"""
    add_instance_bulk_list = []
    for row in instance_rows:
        if ProblemInstance.objects.filter(name=row["name"]).exists():
            continue
        add_instance_bulk_list.append(ProblemInstance(**row))
    ProblemInstance.objects.bulk_create(add_instance_bulk_list)
    logger.info("Stored %d new instances", len(add_instance_bulk_list))
    return len(add_instance_bulk_list)


def get_instance(name):
    try:
        return ProblemInstance.objects.get(name=name)
    except ProblemInstance.DoesNotExist:
        raise MissingInstanceError(
            f"Instance {name} is not in the database, run gen_instances first"
        ) from None


def find_runs_not_in_db(instance_names, method, seeds, hpo=False):
    """List of (instance, seed) pairs which have no run record yet"""
    runs_not_in_database = []
    for name in instance_names:
        for seed in seeds:
            if not RunRecord.objects.filter(
                instance__name=name, method=method, seed=seed, hpo=hpo
            ).exists():
                runs_not_in_database.append((name, seed))
    return runs_not_in_database


def save_runs_to_db(run_payloads, hpo=False):
    """Save run payloads to database, replacing earlier records of the same run"""
    bulk_save_run_list = []
    for payload in run_payloads:
        instance = get_instance(payload["instance"])
        RunRecord.objects.filter(
            instance=instance, method=payload["method"], seed=payload["seed"], hpo=hpo
        ).delete()
        bulk_save_run_list.append(
            RunRecord(
                instance=instance,
                method=payload["method"],
                seed=payload["seed"],
                config=payload["config"],
                traces=payload["traces"],
                diagnostics=payload["diagnostics"],
                circuit=payload["circuit"],
                estimate=payload["estimate"],
                approximation_ratio=payload["approximation_ratio"],
                approximation_ratio_raw=payload["approximation_ratio_raw"],
                composition=payload["composition"],
                wall_time=payload["wall_time"],
                hpo=hpo,
            )
        )
    RunRecord.objects.bulk_create(bulk_save_run_list)
    return bulk_save_run_list
