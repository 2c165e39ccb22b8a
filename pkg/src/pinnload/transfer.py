"""Online stage: fine-tune a pre-trained model on a new problem.

Load a checkpoint, freeze the first layers (default three), inherit or reset
the task weights, re-initialize the loads, and train the rest with the
smaller fine-tune learning rate.  Optimizer moments always start fresh;
frozen layers keep their checkpoint values bitwise throughout.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .losses import TaskWeights
from .network import Checkpoint, CheckpointError, MlpParams, freeze
from .problems import Problem
from .training import TrainResult, TrainSettings, train

__all__ = ["FINETUNE_LR", "FinetuneState", "prepare_finetune", "finetune"]

FINETUNE_LR = 5e-4
DEFAULT_FREEZE = 3


@dataclass
class FinetuneState:
    params: MlpParams
    task_weights: TaskWeights
    freeze_layers: int
    inherit_task_weights: bool
    source_epoch: int
    source_problem: str


def prepare_finetune(
    checkpoint: Checkpoint,
    problem: Problem,
    freeze_layers: int = DEFAULT_FREEZE,
    inherit_task_weights: bool = True,
) -> FinetuneState:
    """Validate the checkpoint against the new problem and set up freezing.

    Requires matching input/output dimensions; inheriting task weights
    additionally requires the stored task count to match the new problem's
    active tasks.  Loads are not carried over (they are re-initialized to one
    by the trainer).
    """
    params = checkpoint.params
    if params.in_dim != problem.dim or params.out_dim != problem.n_out:
        raise CheckpointError(
            f"checkpoint maps {params.in_dim} -> {params.out_dim}, problem "
            f"{problem.name} needs {problem.dim} -> {problem.n_out}"
        )
    n_layers = params.n_layers
    if not 0 <= freeze_layers <= n_layers - 1:
        raise ValueError(
            f"freeze depth {freeze_layers} out of range 0..{n_layers - 1} "
            f"(at least one layer must stay tunable)"
        )
    active = problem.loss_inputs().active_terms()
    if inherit_task_weights:
        if checkpoint.task_count != len(active):
            raise CheckpointError(
                f"checkpoint stores {checkpoint.task_count} task weights "
                f"({', '.join(checkpoint.task_names) or 'unnamed'}), problem "
                f"{problem.name} has {len(active)} tasks ({', '.join(active)})"
            )
        weights = TaskWeights.from_alphas(active, checkpoint.alphas)
    else:
        weights = TaskWeights.ones(active)
    return FinetuneState(
        params=freeze(params, freeze_layers),
        task_weights=weights,
        freeze_layers=freeze_layers,
        inherit_task_weights=inherit_task_weights,
        source_epoch=checkpoint.epoch,
        source_problem=checkpoint.problem,
    )


def finetune(
    state: FinetuneState,
    problem: Problem,
    settings: TrainSettings,
) -> TrainResult:
    """Train from the prepared state with the fine-tune learning rate.

    The standard network learning rate is replaced by the smaller fine-tune
    rate; an explicitly non-default ``lr_theta`` is left alone.
    """
    if settings.lr_theta == TrainSettings(epochs=0).lr_theta:
        settings = replace(settings, lr_theta=FINETUNE_LR)
    return train(
        problem,
        settings,
        params=state.params,
        task_weights=state.task_weights,
    )
