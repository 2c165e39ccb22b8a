"""Adam with independent parameter groups, the epoch loop, and run metrics.

One epoch = one full-batch loss evaluation, one reverse sweep, one Adam step
per parameter group (network weights, task weights, loads, SA weights), with
the group learning rates

    theta 0.001 (0.0005 when fine-tuning) | alpha 0.0001 | loads 0.001 | SA 0.001

and Adam constants beta1 = 0.9, beta2 = 0.999, eps = 1e-8.  Frozen layers are
excluded from their group, so neither their values nor their moments ever
change.  Runs are deterministic for a fixed seed; a metrics row is logged
every epoch (term losses before the step, parameters after it).
"""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass, field

import numpy as np

from .losses import (
    LoadSet,
    PointwiseWeights,
    TaskWeights,
    combine_plain,
    combine_sa,
    combine_uncertainty,
    term_losses,
)
from .network import Checkpoint, MlpParams, init_mlp
from .problems import Problem
from .tape import Tape, gradients

__all__ = [
    "Adam",
    "TrainSettings",
    "RunMetrics",
    "TrainResult",
    "TrainingDiverged",
    "train",
    "first_epoch_under",
]

WEIGHTINGS = ("plain", "uncertainty", "sa")


class TrainingDiverged(RuntimeError):
    """Loss or gradients became non-finite; carries the last finite state."""

    def __init__(self, message, checkpoint=None, metrics=None):
        super().__init__(message)
        self.checkpoint = checkpoint
        self.metrics = metrics


@dataclass
class TrainSettings:
    epochs: int
    seed: int = 0
    weighting: str = "uncertainty"
    lr_theta: float = 1e-3
    lr_alpha: float = 1e-4
    lr_load: float = 1e-3
    lr_sa: float = 1e-3
    sa_all_points: bool = False  # also weight collocation residuals (off: data only)

    def __post_init__(self):
        if self.weighting not in WEIGHTINGS:
            raise ValueError(f"weighting must be one of {WEIGHTINGS}")
        if self.epochs < 0:
            raise ValueError("epochs must be nonnegative")


class Adam:
    """Bias-corrected Adam over named groups of parameter arrays.

    Updates are applied in place; a group with ``maximize=True`` ascends.
    The step counter is shared across groups.
    """

    beta1 = 0.9
    beta2 = 0.999
    eps = 1e-8

    def __init__(self):
        self.groups: dict[str, dict] = {}
        self.t = 0

    def add_group(self, name: str, arrays: list[np.ndarray], lr: float, maximize=False):
        self.groups[name] = {
            "arrays": arrays,
            "lr": lr,
            "maximize": maximize,
            "m": [np.zeros_like(a) for a in arrays],
            "v": [np.zeros_like(a) for a in arrays],
        }

    def step(self, grads: dict[str, list[np.ndarray]]) -> None:
        self.t += 1
        bc1 = 1.0 - self.beta1**self.t
        bc2 = 1.0 - self.beta2**self.t
        for name, group in self.groups.items():
            if group["lr"] == 0.0:
                continue
            sign = +1.0 if group["maximize"] else -1.0
            for arr, g, m, v in zip(group["arrays"], grads[name], group["m"], group["v"]):
                m *= self.beta1
                m += (1.0 - self.beta1) * g
                v *= self.beta2
                v += (1.0 - self.beta2) * (g * g)
                arr += sign * group["lr"] * (m / bc1) / (np.sqrt(v / bc2) + self.eps)


@dataclass
class RunMetrics:
    """Per-epoch traces.  Losses are evaluated before the epoch's step,
    task weights / loads after it, so the last row holds the final state."""

    task_names: tuple[str, ...]
    segment_ids: tuple[int, ...]
    epochs: list[int] = field(default_factory=list)
    terms: dict[str, list[float]] = field(default_factory=dict)
    alphas: dict[str, list[float]] = field(default_factory=dict)
    pbar: dict[int, list[float]] = field(default_factory=dict)
    loads: dict[int, list[float]] = field(default_factory=dict)
    mse_true: list[float] = field(default_factory=list)
    wall_seconds: float = 0.0

    def __post_init__(self):
        for t in self.task_names:
            self.terms.setdefault(t, [])
            self.alphas.setdefault(t, [])
        for s in self.segment_ids:
            self.pbar.setdefault(s, [])
            self.loads.setdefault(s, [])

    def append(self, epoch, term_values, alpha_values, pbar_values, load_values, mse_true):
        self.epochs.append(epoch)
        for t in self.task_names:
            self.terms[t].append(term_values.get(t, np.nan))
            self.alphas[t].append(alpha_values.get(t, np.nan))
        for s in self.segment_ids:
            self.pbar[s].append(pbar_values[s])
            self.loads[s].append(load_values[s])
        self.mse_true.append(mse_true)

    def load_error(self, true_loads: dict[int, float]) -> np.ndarray:
        """Per-epoch worst relative load error across segments."""
        errs = []
        for s in self.segment_ids:
            target = true_loads[s]
            errs.append(np.abs(np.asarray(self.loads[s]) - target) / abs(target))
        return np.max(np.stack(errs), axis=0) if errs else np.array([])

    def final_combined_weights(self) -> dict[str, float]:
        return {
            t: 1.0 / (2.0 * self.alphas[t][-1] ** 2)
            for t in self.task_names
            if self.alphas[t] and np.isfinite(self.alphas[t][-1])
        }

    def to_csv(self, path) -> None:
        header = ["epoch"]
        header += [f"{t}" for t in ("L0", "L1", "L2", "L3", "L4", "L5")]
        header += [f"alpha_{t}" for t in self.task_names]
        header += [f"weight_{t}" for t in self.task_names]
        header += [f"Pbar_{s}" for s in self.segment_ids]
        header += [f"P_{s}" for s in self.segment_ids]
        header += ["mse_true"]

        def fmt(x):
            return "" if x is None or (isinstance(x, float) and np.isnan(x)) else repr(float(x))

        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            for i, epoch in enumerate(self.epochs):
                row = [epoch]
                for t in ("L0", "L1", "L2", "L3", "L4", "L5"):
                    row.append(fmt(self.terms[t][i]) if t in self.terms else "")
                for t in self.task_names:
                    row.append(fmt(self.alphas[t][i]))
                for t in self.task_names:
                    a = self.alphas[t][i]
                    row.append(fmt(1.0 / (2.0 * a * a)) if np.isfinite(a) else "")
                for s in self.segment_ids:
                    row.append(fmt(self.pbar[s][i]))
                for s in self.segment_ids:
                    row.append(fmt(self.loads[s][i]))
                row.append(fmt(self.mse_true[i]))
                writer.writerow(row)


@dataclass
class TrainResult:
    checkpoint: Checkpoint
    metrics: RunMetrics
    params: MlpParams
    task_weights: TaskWeights
    load_set: LoadSet | None


def first_epoch_under(values, threshold: float) -> int | None:
    """First (1-based) index where the series crosses below the threshold."""
    for i, v in enumerate(values):
        if np.isfinite(v) and v < threshold:
            return i + 1
    return None


def evaluate_loss(
    problem: Problem,
    weighting: str,
    params: MlpParams,
    task_weights: TaskWeights | None = None,
    load_pbar: np.ndarray | None = None,
) -> tuple[float, dict[str, float]]:
    """One loss evaluation at a given state, without taking a step."""
    li = problem.loss_inputs()
    active = li.active_terms()
    if task_weights is None:
        task_weights = TaskWeights.ones(active)
    tape = Tape()
    layers = params.lift(tape)
    load_vars = None
    if problem.mode == "inverse":
        load_set = LoadSet.ones(problem.segment_ids)
        if load_pbar is not None:
            load_set.pbar[:] = load_pbar
        load_vars = load_set.lift(tape)
    terms = term_losses(tape, li, layers, load_vars)
    if weighting == "uncertainty":
        total = combine_uncertainty(terms, task_weights.lift(tape))
    else:
        total = combine_plain(terms)
    return float(total.value), {k: float(v.value) for k, v in terms.items()}


def train(
    problem: Problem,
    settings: TrainSettings,
    *,
    params: MlpParams | None = None,
    task_weights: TaskWeights | None = None,
    load_init: np.ndarray | None = None,
) -> TrainResult:
    """Full-batch training of a problem; deterministic for a fixed seed.

    ``params`` and ``task_weights`` may come from a checkpoint (transfer
    learning); fresh loads are always initialized to one unless
    ``load_init`` overrides them (used only by tests).
    """
    li = problem.loss_inputs()
    active = li.active_terms()

    if params is None:
        params = init_mlp(problem.layer_sizes, settings.seed)
    else:
        if params.layer_sizes != problem.layer_sizes:
            raise ValueError(
                f"parameter stack {params.layer_sizes} does not fit problem "
                f"{problem.layer_sizes}"
            )
        params = params.copy()

    if task_weights is None:
        task_weights = TaskWeights.ones(active)
    else:
        if task_weights.names != active:
            raise ValueError(
                f"task weights cover {task_weights.names}, problem needs {active}"
            )
        task_weights = TaskWeights(
            task_weights.names, task_weights.alphas.copy(), task_weights.log_var.copy()
        )

    load_set = None
    if problem.mode == "inverse":
        load_set = LoadSet.ones(problem.segment_ids)
        if load_init is not None:
            load_set.pbar[:] = load_init

    pointwise = None
    if settings.weighting == "sa":
        if li.data is None:
            raise ValueError("SA weighting needs data points")
        pointwise = PointwiseWeights.uniform(len(li.data[0]), settings.seed)

    adam = Adam()
    adam.add_group("theta", params.trainable_arrays(), settings.lr_theta)
    if settings.weighting == "uncertainty":
        adam.add_group("alpha", [task_weights.log_var], settings.lr_alpha)
    if load_set is not None:
        adam.add_group("load", [load_set.pbar], settings.lr_load)
    if pointwise is not None:
        adam.add_group("sa", [pointwise.s], settings.lr_sa, maximize=True)

    metrics = RunMetrics(active, problem.segment_ids)
    ref_col = problem.reference_scaled_at_collocation()
    xbar_col = li.collocation

    def mse_true() -> float:
        if ref_col is None:
            return np.nan
        pred = problem.predict_scaled(params, xbar_col)[:, : problem.dim]
        return float(np.mean(np.sum((pred - ref_col) ** 2, axis=1)))

    def snapshot(epoch: int) -> Checkpoint:
        return Checkpoint(
            params=params.copy(),
            alphas=task_weights.alphas.copy(),
            loads=np.array([]) if load_set is None else load_set.pbar.copy(),
            problem=problem.name,
            epoch=epoch,
            seed=settings.seed,
            task_names=active,
            scales=problem.scales.as_dict(),
        )

    start = time.perf_counter()
    for epoch in range(1, settings.epochs + 1):
        tape = Tape()
        layers = params.lift(tape)
        load_vars = load_set.lift(tape) if load_set is not None else None

        if settings.weighting == "sa":
            terms, data_rows = term_losses(tape, li, layers, load_vars, return_data_rows=True)
            weights = pointwise.lift(tape)
            total = combine_sa(terms, data_rows, weights)
        elif settings.weighting == "uncertainty":
            terms = term_losses(tape, li, layers, load_vars)
            alpha_vars = task_weights.lift(tape)
            total = combine_uncertainty(terms, alpha_vars)
        else:
            terms = term_losses(tape, li, layers, load_vars)
            total = combine_plain(terms)

        term_values = {k: float(v.value) for k, v in terms.items()}
        bad = [k for k, v in term_values.items() if not np.isfinite(v)]
        if bad or not np.isfinite(total.value):
            metrics.wall_seconds = time.perf_counter() - start
            raise TrainingDiverged(
                f"{problem.name}: non-finite loss at epoch {epoch} "
                f"(terms: {bad or ['total']})",
                checkpoint=snapshot(epoch - 1),
                metrics=metrics,
            )

        wrt: list = []
        group_slices: dict[str, slice] = {}

        theta_vars = [
            v
            for l, pair in enumerate(layers)
            if not params.frozen[l]
            for v in pair
        ]
        group_slices["theta"] = slice(len(wrt), len(wrt) + len(theta_vars))
        wrt += theta_vars
        if settings.weighting == "uncertainty":
            group_slices["alpha"] = slice(len(wrt), len(wrt) + 1)
            wrt.append(task_weights._svar)
        if load_vars is not None:
            pvars = [load_vars[s] for s in problem.segment_ids]
            group_slices["load"] = slice(len(wrt), len(wrt) + len(pvars))
            wrt += pvars
        if pointwise is not None:
            group_slices["sa"] = slice(len(wrt), len(wrt) + 1)
            wrt.append(pointwise._svar)

        grads = gradients(total, wrt)
        if any(not np.all(np.isfinite(g)) for g in grads):
            metrics.wall_seconds = time.perf_counter() - start
            raise TrainingDiverged(
                f"{problem.name}: non-finite gradient at epoch {epoch}",
                checkpoint=snapshot(epoch - 1),
                metrics=metrics,
            )

        step_grads = {}
        for name, sl in group_slices.items():
            gs = grads[sl]
            if name == "load":
                step_grads[name] = [np.array([g for g in gs])]
            else:
                step_grads[name] = list(gs)
        adam.step(step_grads)
        if settings.weighting == "uncertainty":
            task_weights.sync()

        alpha_values = {t: float(task_weights.alphas[i]) for i, t in enumerate(active)}
        pbar_values, load_values = {}, {}
        if load_set is not None:
            phys = load_set.physical(problem.scales)
            for i, s in enumerate(problem.segment_ids):
                pbar_values[s] = float(load_set.pbar[i])
                load_values[s] = float(phys[i])
        else:
            for s in problem.segment_ids:
                pbar_values[s] = load_values[s] = np.nan
        metrics.append(epoch, term_values, alpha_values, pbar_values, load_values, mse_true())

    metrics.wall_seconds = time.perf_counter() - start
    return TrainResult(snapshot(settings.epochs), metrics, params, task_weights, load_set)
