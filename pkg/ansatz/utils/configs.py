"""
Experiment configuration.

Config files are plain ``KEY=VALUE`` text read through decouple, so a run can be
described by a file or not at all (every key has a default). Only the file is
read: exported environment variables never override an experiment config.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from decouple import Csv, RepositoryEnv
from django.conf import settings

from ansatz.utils.agent import PpoConfig
from ansatz.utils.baseline import MAX_LAYERS, QaoaConfig
from ansatz.utils.environment import EnvConfig

logger = logging.getLogger(__name__)

METHODS = ("qaoa", "rlvqc_global", "rlvqc_block")
HPO_METHODS = ("rlvqc_global", "qaoa")
DEFAULT_SEEDS = 5
DEFAULT_SIZES = (8,)

# Search space of the random hyperparameter search
STEPS_PER_EPOCH_RANGE = (100, 600)
LR_RANGE = (5e-6, 3e-3)
TRAIN_ITERS_RANGE = (4, 4096)


def mode_of(method: str) -> str:
    if method not in METHODS:
        raise ValueError(f"Unknown method {method!r}, expected one of {METHODS}")
    return method.removeprefix("rlvqc_")


@dataclass(frozen=True)
class ExperimentConfig:
    method: str
    problems: tuple
    topologies: tuple
    sizes: tuple = DEFAULT_SIZES
    seeds: tuple = tuple(range(DEFAULT_SEEDS))
    ppo: PpoConfig | None = None
    env: EnvConfig | None = None
    qaoa: QaoaConfig | None = None
    tuned: bool = False
    output_dir: Path = field(default_factory=lambda: Path(settings.ANSATZ_OUTPUT_ROOT))

    def __post_init__(self):
        mode_of(self.method)
        if not self.seeds:
            raise ValueError("At least one seed is needed")
        if self.method == "qaoa" and self.qaoa is None:
            raise ValueError("The qaoa method needs a QaoaConfig")
        if self.method != "qaoa" and (self.ppo is None or self.env is None):
            raise ValueError(f"{self.method} needs both a PpoConfig and an EnvConfig")
        if self.tuned and self.method not in HPO_METHODS:
            raise ValueError(f"{self.method} has no tuned configs, expected one of {HPO_METHODS}")

    def method_configs(self) -> dict:
        """The sub-configs a run of this method takes"""
        if self.method == "qaoa":
            return {"qaoa": self.qaoa}
        return {"ppo": self.ppo, "env": self.env}


def _reader(path):
    if path is None:
        return lambda key, default, cast: default
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Config file {path} does not exist")
    values = RepositoryEnv(str(path)).data

    def read(key, default, cast):
        if key not in values:
            return default
        return cast(values[key])

    return read


def _optional_int(value):
    return None if value in (None, "", "None") else int(value)


def _optional_float(value):
    return None if value in (None, "", "None") else float(value)


def _bool(value):
    return str(value).strip().lower() in {"1", "true", "yes", "on"}


def load_method_configs(method: str, path=None) -> dict:
    """Resolve the sub-configs of ``method``; missing keys keep their defaults"""
    read = _reader(path)
    if method == "qaoa":
        qaoa = QaoaConfig(
            p=read("QAOA_P", 1, int),
            max_evals=read("QAOA_EVALS", 1000, int),
            n_runs=read("N_RUNS", 1000, int),
            exact=read("EXACT_EXPECTATION", False, _bool),
        )
        return {"qaoa": qaoa}

    mode = mode_of(method)
    ppo_defaults = PpoConfig.for_mode(mode)
    ppo = PpoConfig.for_mode(
        mode,
        total_steps=read("TOTAL_STEPS", ppo_defaults.total_steps, int),
        steps_per_epoch=read("STEPS_PER_EPOCH", ppo_defaults.steps_per_epoch, int),
        pi_lr=read("PI_LR", ppo_defaults.pi_lr, float),
        vf_lr=read("VF_LR", ppo_defaults.vf_lr, float),
        train_pi_iters=read("TRAIN_PI_ITERS", ppo_defaults.train_pi_iters, int),
        train_v_iters=read("TRAIN_V_ITERS", ppo_defaults.train_v_iters, int),
        gamma=read("GAMMA", ppo_defaults.gamma, float),
        gae_lambda=read("GAE_LAMBDA", ppo_defaults.gae_lambda, float),
        clip_epsilon=read("CLIP_EPSILON", ppo_defaults.clip_epsilon, float),
        target_kl=read("TARGET_KL", ppo_defaults.target_kl, float),
        hidden_sizes=tuple(read("HIDDEN_SIZES", ppo_defaults.hidden_sizes, Csv(int))),
    )
    env = EnvConfig(
        mode=mode,
        beta=read("BETA", None, _optional_float),
        n_runs=read("N_RUNS", 1000, int),
        patience=read("PATIENCE", 3, int),
        max_ep_len=read("MAX_EP_LEN", None, _optional_int),
        inner_evals=read("INNER_EVALS", 50, int),
        finetune_evals=read("FINETUNE_EVALS", 1000, int),
        full_refit=read("FULL_REFIT", False, _bool),
        exact=read("EXACT_EXPECTATION", False, _bool),
    )
    return {"ppo": ppo, "env": env}


def load_experiment_config(method: str, problems, topologies, sizes=DEFAULT_SIZES,
                           seeds=None, path=None, output_dir=None,
                           tuned=False) -> ExperimentConfig:
    """With ``tuned`` each instance later reads its own HPO config instead of ``path``"""
    if tuned and path is not None:
        raise ValueError("A tuned experiment reads its configs from the hpo outputs, not --config")
    configs = load_method_configs(method, path)
    if seeds is None:
        seeds = range(DEFAULT_SEEDS)
    options = {"output_dir": Path(output_dir)} if output_dir else {}
    return ExperimentConfig(method, tuple(problems), tuple(topologies), tuple(sizes),
                            tuple(seeds), **configs, tuned=tuned, **options)


def dumps_config(configs: dict) -> str:
    """Every key load_method_configs reads; loading the text gives ``configs`` back.

    Unset per-mode values (``BETA``, ``MAX_EP_LEN``) are written as ``None`` so they
    resolve again for whatever instance size the file is used at.
    """
    lines = []
    if "qaoa" in configs:
        qaoa = configs["qaoa"]
        lines += [
            f"QAOA_P={qaoa.p}",
            f"QAOA_EVALS={qaoa.max_evals}",
            f"N_RUNS={qaoa.n_runs}",
            f"EXACT_EXPECTATION={qaoa.exact}",
        ]
    if "ppo" in configs:
        ppo, env = configs["ppo"], configs["env"]
        lines += [
            f"TOTAL_STEPS={ppo.total_steps}",
            f"STEPS_PER_EPOCH={ppo.steps_per_epoch}",
            f"PI_LR={ppo.pi_lr!r}",
            f"VF_LR={ppo.vf_lr!r}",
            f"TRAIN_PI_ITERS={ppo.train_pi_iters}",
            f"TRAIN_V_ITERS={ppo.train_v_iters}",
            f"GAMMA={ppo.gamma!r}",
            f"GAE_LAMBDA={ppo.gae_lambda!r}",
            f"CLIP_EPSILON={ppo.clip_epsilon!r}",
            f"TARGET_KL={ppo.target_kl!r}",
            f"HIDDEN_SIZES={','.join(str(h) for h in ppo.hidden_sizes)}",
            f"N_RUNS={env.n_runs}",
            f"BETA={env.beta!r}",
            f"PATIENCE={env.patience}",
            f"MAX_EP_LEN={env.max_ep_len!r}",
            f"INNER_EVALS={env.inner_evals}",
            f"FINETUNE_EVALS={env.finetune_evals}",
            f"FULL_REFIT={env.full_refit}",
            f"EXACT_EXPECTATION={env.exact}",
        ]
    return "\n".join(lines) + "\n"


def log_uniform(rng: np.random.Generator, low: float, high: float) -> float:
    return float(np.exp(rng.uniform(np.log(low), np.log(high))))


def sample_ppo_overrides(rng: np.random.Generator) -> dict:
    """One draw from the PPO hyperparameter priors"""
    return {
        "steps_per_epoch": int(rng.integers(STEPS_PER_EPOCH_RANGE[0], STEPS_PER_EPOCH_RANGE[1] + 1)),
        "pi_lr": log_uniform(rng, *LR_RANGE),
        "vf_lr": log_uniform(rng, *LR_RANGE),
        "train_pi_iters": int(rng.integers(TRAIN_ITERS_RANGE[0], TRAIN_ITERS_RANGE[1] + 1)),
        "train_v_iters": int(rng.integers(TRAIN_ITERS_RANGE[0], TRAIN_ITERS_RANGE[1] + 1)),
    }


def sample_qaoa_depth(rng: np.random.Generator) -> int:
    return int(rng.integers(1, MAX_LAYERS + 1))
