"""Linear-elastic stress assembly, residual operators, hard Dirichlet
transforms."""

import numpy as np
import pytest

from pinnload.elastic import pde_residual, stress, traction_residual
from pinnload.jets import constant_jets
from pinnload.oracles import cylinder_displacement
from pinnload.presets import get_preset
from pinnload.tape import Tape, TapeError
from pinnload.transforms import AffineMultiplier, DirichletTransform, apply_dirichlet


def _jets_from_field(tape, value, grad, hess=None):
    return constant_jets(tape, np.asarray(value, float),
                         np.asarray(grad, float),
                         None if hess is None else np.asarray(hess, float))


def _sigma_array(state):
    d = state.dim
    n = state.sigma[0][0].value.shape[0]
    out = np.empty((n, d, d))
    for i in range(d):
        for j in range(d):
            out[:, i, j] = state.sigma[i][j].value
    return out


class TestStress:
    def test_zero_field_gives_zero_stress(self):
        tape = Tape()
        n = 4
        jets = _jets_from_field(tape, np.zeros((n, 2)), np.zeros((2, n, 2)),
                                np.zeros((2, 2, n, 2)))
        state = stress(jets, ratio=1.5)
        assert np.all(_sigma_array(state) == 0.0)

    def test_diagonal_gradient_has_no_shear(self):
        # u = (a x, b y): the symmetric gradient is diagonal
        tape = Tape()
        n = 3
        grad = np.zeros((2, n, 2))
        grad[0, :, 0] = 0.7   # du_x/dx
        grad[1, :, 1] = -0.2  # du_y/dy
        jets = _jets_from_field(tape, np.zeros((n, 2)), grad, np.zeros((2, 2, n, 2)))
        state = stress(jets, ratio=0.8)
        assert np.all(state.sigma[0][1].value == 0.0)

    def test_symmetry_is_by_construction(self):
        tape = Tape()
        jets = _jets_from_field(tape, np.zeros((2, 2)),
                                np.random.default_rng(0).normal(size=(2, 2, 2)),
                                np.zeros((2, 2, 2, 2)))
        state = stress(jets, ratio=1.0)
        assert state.sigma[0][1] is state.sigma[1][0]

    def test_cylinder_inner_traction_matches_pressure(self):
        """The analytic radial stress at the loaded edge equals -P, i.e.
        -P/sigma_c in scaled units."""
        preset = get_preset("cylinder")
        scales = preset.scales()
        ratio = 2 * 0.3 / (1 - 0.3)  # plane stress

        def field(xbar):
            return cylinder_displacement(xbar * scales.l_c, 1.0, 5.0, 20.0, 1e5, 0.3) / scales.u_c

        # finite-difference jets at (r=1, beta=0): step inward only in x
        x0 = np.array([[1.0 + 2e-4, 1e-3]]) / scales.l_c
        h = 1e-5
        grad = np.zeros((2, 1, 2))
        for k in range(2):
            e = np.zeros(2)
            e[k] = h
            grad[k] = (field(x0 + e) - field(x0 - e)) / (2 * h)
        tape = Tape()
        jets = _jets_from_field(tape, field(x0), grad)
        state = stress(jets, ratio, need_derivatives=False)
        sigma_rr_scaled = state.sigma[0][0].value[0]
        assert sigma_rr_scaled == pytest.approx(-20.0 / scales.sigma_c, rel=1e-3)

    def test_missing_hess_rejected(self):
        tape = Tape()
        jets = _jets_from_field(tape, np.zeros((2, 2)), np.zeros((2, 2, 2)))
        with pytest.raises(TapeError):
            stress(jets, ratio=1.0, need_derivatives=True)


class TestPdeResidual:
    def test_linear_field_has_zero_residual(self, rng):
        tape = Tape()
        n = 5
        grad = np.broadcast_to(rng.normal(size=(2, 1, 2)), (2, n, 2)).copy()
        jets = _jets_from_field(tape, np.zeros((n, 2)), grad, np.zeros((2, 2, n, 2)))
        res = pde_residual(stress(jets, ratio=1.5))
        for r in res:
            assert np.all(r.value == 0.0)

    def test_quadratic_field_hand_value(self):
        """u = (x^2, 0): residual_x = 2 (ratio + 2), residual_y = 0."""
        ratio = 0.8571428571428571
        n, xs = 3, np.array([0.2, 0.5, 0.9])
        value = np.zeros((n, 2))
        value[:, 0] = xs**2
        grad = np.zeros((2, n, 2))
        grad[0, :, 0] = 2 * xs
        hess = np.zeros((2, 2, n, 2))
        hess[0, 0, :, 0] = 2.0
        tape = Tape()
        jets = _jets_from_field(tape, value, grad, hess)
        res = pde_residual(stress(jets, ratio))
        np.testing.assert_allclose(res[0].value, 2 * (ratio + 2), rtol=1e-15)
        np.testing.assert_allclose(res[1].value, 0.0, atol=1e-15)

    def test_superposition(self, rng):
        """Residual and traction operators are linear in the jets."""
        n = 6
        f1 = [rng.normal(size=(n, 2)), rng.normal(size=(2, n, 2)),
              rng.normal(size=(2, 2, n, 2))]
        f2 = [rng.normal(size=(n, 2)), rng.normal(size=(2, n, 2)),
              rng.normal(size=(2, 2, n, 2))]
        for f in (f1, f2):
            f[2] = f[2] + f[2].transpose(1, 0, 2, 3)
        a, b = 1.7, -0.4

        def residual(fields):
            tape = Tape()
            jets = _jets_from_field(tape, *fields)
            res = pde_residual(stress(jets, ratio=1.5))
            return np.stack([r.value for r in res])

        combo = [a * x + b * y for x, y in zip(f1, f2)]
        np.testing.assert_allclose(
            residual(combo), a * residual(f1) + b * residual(f2), rtol=1e-12, atol=1e-12
        )

    def test_derivative_free_state_rejected(self):
        tape = Tape()
        jets = _jets_from_field(tape, np.zeros((2, 2)), np.zeros((2, 2, 2)))
        state = stress(jets, 1.0, need_derivatives=False)
        with pytest.raises(TapeError):
            pde_residual(state)


class TestTractionResidual:
    def test_zero_stress_zero_target(self):
        tape = Tape()
        jets = _jets_from_field(tape, np.zeros((3, 2)), np.zeros((2, 3, 2)))
        state = stress(jets, 1.0, need_derivatives=False)
        normals = np.tile([1.0, 0.0], (3, 1))
        res = traction_residual(state, normals, None)
        assert all(np.all(r.value == 0.0) for r in res)

    def test_uniaxial_stress_cancels_matching_target(self):
        tape = Tape()
        n = 4
        grad = np.zeros((2, n, 2))
        grad[0, :, 0] = 0.5  # sigma_xx = ratio*0.5 + 2*0.5 with ratio=0
        jets = _jets_from_field(tape, np.zeros((n, 2)), grad)
        state = stress(jets, ratio=0.0, need_derivatives=False)
        normals = np.tile([1.0, 0.0], (n, 1))
        target = [np.full(n, 1.0), np.zeros(n)]
        res = traction_residual(state, normals, target)
        for r in res:
            np.testing.assert_allclose(r.value, 0.0, atol=1e-15)

    def test_non_unit_normal_rejected(self):
        tape = Tape()
        jets = _jets_from_field(tape, np.zeros((2, 2)), np.zeros((2, 2, 2)))
        state = stress(jets, 1.0, need_derivatives=False)
        with pytest.raises(ValueError, match="unit"):
            traction_residual(state, np.tile([1.0 + 1e-9, 0.0], (2, 1)), None)


class TestDirichletTransform:
    def test_identity_multipliers_return_same_jets(self):
        tape = Tape()
        jets = _jets_from_field(tape, np.ones((3, 2)), np.zeros((2, 3, 2)))
        out = apply_dirichlet(jets, DirichletTransform((None, None)), np.zeros((3, 2)))
        assert out is jets

    def test_constrained_component_vanishes_on_zero_set(self, rng):
        mult = AffineMultiplier(0.0, (1.0, 0.0))  # m = x
        tr = DirichletTransform((mult, None))
        xbar = np.stack([np.zeros(100), rng.uniform(-1, 1, 100)], 1)
        tape = Tape()
        jets = _jets_from_field(tape, rng.normal(size=(100, 2)), np.zeros((2, 100, 2)))
        out = apply_dirichlet(jets, tr, xbar)
        assert np.all(out.value.value[:, 0] == 0.0)
        assert not np.all(out.value.value[:, 1] == 0.0)

    def test_product_rule_on_constant_field(self):
        """u = c with m = x: d(u m)/dx = c and the second derivative is 0."""
        c = 1.3
        xbar = np.array([[0.4, 0.1], [2.0, -0.3]])
        tape = Tape()
        n = len(xbar)
        jets = _jets_from_field(tape, np.full((n, 2), c), np.zeros((2, n, 2)),
                                np.zeros((2, 2, n, 2)))
        tr = DirichletTransform((AffineMultiplier(0.0, (1.0, 0.0)),
                                 AffineMultiplier(0.0, (1.0, 0.0))))
        out = apply_dirichlet(jets, tr, xbar)
        np.testing.assert_allclose(out.grad.value[0], c, rtol=1e-15)
        np.testing.assert_allclose(out.grad.value[1], 0.0, atol=1e-15)
        np.testing.assert_allclose(out.hess.value, 0.0, atol=1e-15)

    def test_wrong_output_count_rejected(self):
        tape = Tape()
        jets = _jets_from_field(tape, np.ones((3, 2)), np.zeros((2, 3, 2)))
        with pytest.raises(ValueError):
            apply_dirichlet(jets, DirichletTransform((None,)), np.zeros((3, 2)))

    def test_quarter_annulus_transform_admits_analytic_field(self):
        """The symmetry multipliers vanish exactly where the analytic field's
        constrained components vanish, so the transformed network can
        represent it: the boundary error of the analytic field is ~0."""
        preset = get_preset("cylinder")
        cloud = preset.build_cloud({"n_r": 8, "n_beta": 8, "n_edge": 20})
        idx = cloud.indices("dirichlet")
        coords = cloud.coords[idx]
        u = cylinder_displacement(coords, 1.0, 5.0, 20.0, 1e5, 0.3)
        mask = ~np.isnan(cloud.observed[idx])
        err = np.mean((u / preset.u_c) ** 2 * mask)
        assert err < 1e-12
