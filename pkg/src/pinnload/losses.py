"""Per-task losses and the three weighting strategies.

The loss terms, each a mean squared residual over its own point set:

    L0  prescribed-displacement mismatch on Dirichlet points
    L1  equilibrium (divergence of the scaled stress) on collocation points
    L2  traction on free boundaries
    L3  traction against the (learnable) loads, summed over segments
    L4  data mismatch at monitoring points
    L5  incompressibility det F - 1 (hyperelastic only)

Forward problems train L0-L3 (L0 drops out when the Dirichlet conditions are
hard-imposed by the output transform); inverse problems drop L0 and add L4,
plus L5 for the hyperelastic model.  A positive segment load acts opposite
the outward normal (pressure); tension segments flip the sign.

Weighting strategies: plain sum; homoscedastic uncertainty
``sum_i [ L_i / (2 a_i^2) + log(1 + a_i^2) ]`` with one learnable noise
parameter per task; SA pointwise weights on the data residuals, ascended
while the network descends.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .elastic import pde_residual, stress, traction_residual
from .hyperelastic import (
    deformation_gradient,
    hyper_pde_residual,
    incompressibility_residual,
    pk1_stress,
)
from .jets import jet_forward
from .scaling import ScaleSet
from .tape import Tape, Var, add, asum, div, log, mean_sq, mul, pluck, row_sq, sub
from .transforms import DirichletTransform, apply_dirichlet

__all__ = [
    "TERM_ORDER",
    "LossSetError",
    "TaskWeights",
    "LoadSet",
    "PointwiseWeights",
    "LossInputs",
    "SegmentArrays",
    "term_losses",
    "data_point_residuals",
    "combine_plain",
    "combine_uncertainty",
    "combine_sa",
]

TERM_ORDER = ("L0", "L1", "L2", "L3", "L4", "L5")


class LossSetError(ValueError):
    """A loss term required by the mode has an empty point set."""


@dataclass
class TaskWeights:
    """Noise parameters alpha_i, one per active task (initialized to 1).

    The trainable quantity is s_i = log(alpha_i^2): alpha stays strictly
    positive, the combined weight 1/(2 alpha^2) can never blow up through a
    zero crossing, and one optimizer step moves every weight by a bounded
    factor.  ``alphas`` always mirrors the current state (and is what gets
    checkpointed).
    """

    names: tuple[str, ...]
    alphas: np.ndarray
    log_var: np.ndarray

    @classmethod
    def ones(cls, names) -> "TaskWeights":
        names = tuple(names)
        return cls(names, np.ones(len(names)), np.zeros(len(names)))

    @classmethod
    def from_alphas(cls, names, alphas) -> "TaskWeights":
        names = tuple(names)
        alphas = np.asarray(alphas, dtype=np.float64).copy()
        if len(alphas) != len(names) or np.any(alphas <= 0):
            raise ValueError(f"need {len(names)} positive noise parameters")
        return cls(names, alphas, 2.0 * np.log(alphas))

    def lift(self, tape: Tape) -> dict[str, Var]:
        from .tape import exp, pluck

        self._svar = tape.leaf(self.log_var)
        return {
            n: exp(mul(pluck(self._svar, (i,)), 0.5)) for i, n in enumerate(self.names)
        }

    def sync(self) -> None:
        """Refresh the alpha view after an optimizer step on log_var."""
        self.alphas = np.exp(0.5 * self.log_var)

    def combined_weights(self) -> np.ndarray:
        """Effective task weights 1/(2 alpha^2)."""
        return 1.0 / (2.0 * self.alphas**2)


@dataclass
class LoadSet:
    """Learnable scaled load magnitudes, one per Neumann segment."""

    segment_ids: tuple[int, ...]
    pbar: np.ndarray

    @classmethod
    def ones(cls, segment_ids) -> "LoadSet":
        ids = tuple(segment_ids)
        return cls(ids, np.ones(len(ids)))

    def lift(self, tape: Tape) -> dict[int, Var]:
        return {s: tape.leaf(self.pbar[i]) for i, s in enumerate(self.segment_ids)}

    def physical(self, scales: ScaleSet) -> np.ndarray:
        return scales.unscale_load(self.pbar)


@dataclass
class PointwiseWeights:
    """SA weights, one per data point; nonnegative via w = s**2."""

    s: np.ndarray

    @classmethod
    def uniform(cls, n: int, seed: int) -> "PointwiseWeights":
        w0 = np.random.default_rng(seed).uniform(0.0, 1.0, n)
        return cls(np.sqrt(w0))

    @property
    def weights(self) -> np.ndarray:
        return self.s**2

    def lift(self, tape: Tape) -> Var:
        self._svar = tape.leaf(self.s)
        return mul(self._svar, self._svar)


@dataclass
class SegmentArrays:
    seg_id: int
    xbar: np.ndarray
    normals: np.ndarray
    orientation: float  # -1 pressure (load opposes outward normal), +1 tension
    fixed_pbar: float | None = None  # forward mode: known scaled load


@dataclass
class LossInputs:
    """Preprocessed, scaled, immutable arrays for one problem."""

    kind: str  # 'elastic' | 'hyperelastic'
    mode: str  # 'forward' | 'inverse'
    dim: int
    n_out: int
    ratio: float
    shear_scale: float
    scales: ScaleSet
    transform: DirichletTransform
    collocation: np.ndarray
    free: tuple[np.ndarray, np.ndarray] | None
    segments: list[SegmentArrays] = field(default_factory=list)
    dirichlet: tuple[np.ndarray, np.ndarray, np.ndarray] | None = None
    data: tuple[np.ndarray, np.ndarray] | None = None

    def active_terms(self) -> tuple[str, ...]:
        terms = []
        if self.mode == "forward":
            if self.dirichlet is not None:
                terms.append("L0")
        terms.append("L1")
        if self.free is not None or self.mode == "inverse":
            terms.append("L2")
        terms.append("L3")
        if self.mode == "inverse":
            terms.append("L4")
        if self.kind == "hyperelastic":
            terms.append("L5")
        return tuple(terms)

    def check_sets(self) -> None:
        need = {"L1": self.collocation is not None and len(self.collocation) > 0}
        if self.mode == "inverse":
            need["L2"] = self.free is not None and len(self.free[0]) > 0
            need["L4"] = self.data is not None and len(self.data[0]) > 0
        need["L3"] = bool(self.segments) and all(len(s.xbar) > 0 for s in self.segments)
        for term, ok in need.items():
            if not ok:
                raise LossSetError(
                    f"term {term} is active in {self.mode} mode but its point set is empty"
                )


def _net_jets(tape, li: LossInputs, layers, xbar, order):
    jets = jet_forward(tape, layers, xbar, order=order)
    return apply_dirichlet(jets, li.transform, xbar)


def _stress_state(tape, li: LossInputs, layers, xbar, order, need_derivatives):
    jets = _net_jets(tape, li, layers, xbar, order)
    if li.kind == "elastic":
        return stress(jets, li.ratio, li.shear_scale, need_derivatives=need_derivatives), jets
    defm = deformation_gradient(jets, li.scales, coords=xbar, need_derivatives=need_derivatives)
    pbar = pluck(jets.value, (slice(None), li.dim))
    dpbar = None
    if need_derivatives:
        dpbar = [pluck(jets.grad, (m, slice(None), li.dim)) for m in range(li.dim)]
    return pk1_stress(defm, pbar, dpbar), (jets, defm)


def _mse_components(residuals) -> Var:
    total = mean_sq(residuals[0])
    for r in residuals[1:]:
        total = add(total, mean_sq(r))
    return total


def _segment_loss(tape, li, layers, seg: SegmentArrays, load_vars) -> Var:
    state, _ = _stress_state(tape, li, layers, seg.xbar, order=1, need_derivatives=False)
    if seg.fixed_pbar is not None:
        target = [seg.orientation * seg.fixed_pbar * seg.normals[:, i] for i in range(li.dim)]
    else:
        pvar = load_vars[seg.seg_id]
        target = [mul(pvar, seg.orientation * seg.normals[:, i]) for i in range(li.dim)]
    return _mse_components(traction_residual(state, seg.normals, target))


def data_point_residuals(tape, li: LossInputs, layers) -> tuple[Var, Var]:
    """(L4, per-point squared residuals) at the data points."""
    xbar, obs = li.data
    jets = _net_jets(tape, li, layers, xbar, order=0)
    pred = jets.value
    if li.n_out != li.dim:  # hyperelastic: ignore the pressure output
        pred = pluck(pred, (slice(None), slice(0, li.dim)))
    resid = sub(pred, obs)
    return mean_sq(resid), row_sq(resid)


def term_losses(
    tape: Tape,
    li: LossInputs,
    layers: list,
    load_vars: dict[int, Var] | None = None,
    return_data_rows: bool = False,
):
    """Evaluate every active loss term on the given tape.

    Collocation jets are shared between the equilibrium and incompressibility
    terms; boundary sets are evaluated at first order and data points at
    order zero.  With ``return_data_rows`` the per-point squared data
    residuals are returned alongside the terms (for SA weighting).
    """
    li.check_sets()
    terms: dict[str, Var] = {}

    if "L0" in li.active_terms() and li.dirichlet is not None:
        xbar, targets, mask = li.dirichlet
        jets = _net_jets(tape, li, layers, xbar, order=0)
        pred = jets.value
        if li.n_out != li.dim:
            pred = pluck(pred, (slice(None), slice(0, li.dim)))
        terms["L0"] = mean_sq(sub(pred, np.where(mask, targets, 0.0)), mask=mask)

    state, extra = _stress_state(tape, li, layers, li.collocation, order=2, need_derivatives=True)
    if li.kind == "elastic":
        terms["L1"] = _mse_components(pde_residual(state))
    else:
        terms["L1"] = _mse_components(hyper_pde_residual(state))
        terms["L5"] = mean_sq(incompressibility_residual(extra[1]))

    if li.free is not None:
        xbar, normals = li.free
        fstate, _ = _stress_state(tape, li, layers, xbar, order=1, need_derivatives=False)
        terms["L2"] = _mse_components(traction_residual(fstate, normals, None))

    l3 = None
    for seg in li.segments:
        part = _segment_loss(tape, li, layers, seg, load_vars)
        l3 = part if l3 is None else add(l3, part)
    if l3 is not None:
        terms["L3"] = l3

    data_rows = None
    if li.mode == "inverse":
        terms["L4"], data_rows = data_point_residuals(tape, li, layers)

    ordered = {k: terms[k] for k in TERM_ORDER if k in terms}
    if return_data_rows:
        return ordered, data_rows
    return ordered


# ---------------------------------------------------------------------------
# weighting strategies
# ---------------------------------------------------------------------------


def combine_plain(terms: dict[str, Var]) -> Var:
    """Unweighted sum of the active task losses."""
    if not terms:
        raise LossSetError("no loss terms to combine")
    total = None
    for k in TERM_ORDER:
        if k in terms:
            total = terms[k] if total is None else add(total, terms[k])
    return total


def combine_uncertainty(terms: dict[str, Var], alpha_vars: dict[str, Var]) -> Var:
    """sum_i [ L_i / (2 a_i^2) + log(1 + a_i^2) ].

    The log(1 + a^2) regularizer keeps the total nonnegative and bounds the
    learned noise parameters.
    """
    total = None
    for k in TERM_ORDER:
        if k not in terms:
            continue
        a = alpha_vars[k]
        asq = mul(a, a)
        piece = add(div(terms[k], mul(asq, 2.0)), log(add(asq, 1.0)))
        total = piece if total is None else add(total, piece)
    return total


def combine_sa(
    terms_except_data: dict[str, Var],
    data_residual_sq: Var,
    weights: Var,
) -> Var:
    """Plain sum of the physics terms plus mean(w_i * r_i^2) over data points.

    The pointwise weights are trained by gradient ascent (they grow where the
    residual stays large) while every other parameter descends.
    """
    if weights.shape != data_residual_sq.shape:
        raise LossSetError(
            f"{weights.shape[0]} pointwise weights for "
            f"{data_residual_sq.shape[0]} data residuals"
        )
    n = data_residual_sq.shape[0]
    data_term = div(asum(mul(weights, data_residual_sq)), float(n))
    total = data_term
    for k in TERM_ORDER:
        if k in terms_except_data and k != "L4":
            total = add(total, terms_except_data[k])
    return total
