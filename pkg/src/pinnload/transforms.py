"""Hard imposition of Dirichlet conditions by output multipliers.

Each network output is multiplied by a function that vanishes exactly on the
constrained boundary portion, so the constraint holds for any parameters.
Gradients and Hessians are propagated through the product rule.  All
multipliers used by the presets are affine in the scaled coordinates
(``m(x) = a + b . x``), so their own second derivatives vanish; the product
rule below relies on that.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .jets import Jets, sym_outer
from .tape import add, mul

__all__ = ["AffineMultiplier", "DirichletTransform", "apply_dirichlet", "identity_transform"]


@dataclass(frozen=True)
class AffineMultiplier:
    """Multiplier ``m(x) = const + linear . x`` in scaled coordinates."""

    const: float
    linear: tuple[float, ...]

    def values(self, xbar: np.ndarray) -> np.ndarray:
        return self.const + xbar @ np.asarray(self.linear)


@dataclass(frozen=True)
class DirichletTransform:
    """Per-output multipliers; ``None`` leaves an output untouched."""

    multipliers: tuple[AffineMultiplier | None, ...]

    @property
    def n_outputs(self) -> int:
        return len(self.multipliers)

    def is_identity(self) -> bool:
        return all(m is None for m in self.multipliers)

    def evaluate(self, xbar: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Multiplier values ``(N, m)`` and gradients ``(d, N, m)``."""
        n, d = xbar.shape
        m = len(self.multipliers)
        vals = np.ones((n, m))
        grads = np.zeros((d, n, m))
        for i, mult in enumerate(self.multipliers):
            if mult is None:
                continue
            vals[:, i] = mult.values(xbar)
            for k in range(d):
                grads[k, :, i] = mult.linear[k]
        return vals, grads

    def apply_value(self, xbar: np.ndarray, u: np.ndarray) -> np.ndarray:
        """Plain numpy application (for prediction outside training)."""
        vals, _ = self.evaluate(xbar)
        return u * vals


def identity_transform(n_outputs: int) -> DirichletTransform:
    return DirichletTransform((None,) * n_outputs)


def apply_dirichlet(jets: Jets, transform: DirichletTransform, xbar: np.ndarray) -> Jets:
    """Product-rule propagation of jets through ``u_i -> u_i * m_i(x)``."""
    if transform.n_outputs != jets.n_outputs:
        raise ValueError(
            f"transform has {transform.n_outputs} multipliers, "
            f"jets have {jets.n_outputs} outputs"
        )
    if transform.is_identity():
        return jets
    mvals, mgrads = transform.evaluate(np.asarray(xbar, dtype=np.float64))
    value = mul(jets.value, mvals)
    grad = hess = None
    if jets.grad is not None:
        grad = add(mul(jets.grad, mvals), mul(jets.value, mgrads))
    if jets.hess is not None:
        # affine multipliers: the value * d2m term is identically zero
        hess = add(mul(jets.hess, mvals), sym_outer(jets.grad, mgrads))
    return Jets(value, grad, hess)
