"""Neo-Hookean kinematics, PK1 stress, incompressibility, equilibrium."""

import numpy as np
import pytest

from pinnload.hyperelastic import (
    SingularDeformationError,
    deformation_gradient,
    hyper_pde_residual,
    incompressibility_residual,
    pk1_stress,
)
from pinnload.jets import constant_jets
from pinnload.oracles import fd_residual_check, neo_hookean_stress_values
from pinnload.scaling import Material, ScaleSet, make_scales
from pinnload.tape import Tape

SCALES = make_scales(1.0, 0.1, Material(1000.0, 0.5, "incompressible-2d"), "hyperelastic")
K = SCALES.u_c / SCALES.l_c


def _jets(tape, value, grad, hess=None):
    return constant_jets(tape, np.asarray(value, float), np.asarray(grad, float),
                         None if hess is None else np.asarray(hess, float))


def _f_array(defm):
    n = defm.F[0][0].value.shape[0]
    out = np.empty((n, 2, 2))
    for i in range(2):
        for j in range(2):
            out[:, i, j] = defm.F[i][j].value
    return out


def _grad_for_stretch(n, stretch):
    """Scaled displacement gradient reproducing F = diag(s, 1/s)."""
    grad = np.zeros((2, n, 3))
    grad[0, :, 0] = (stretch - 1.0) / K
    grad[1, :, 1] = (1.0 / stretch - 1.0) / K
    return grad


class TestDeformationGradient:
    def test_zero_displacement_is_identity(self):
        tape = Tape()
        jets = _jets(tape, np.zeros((4, 3)), np.zeros((2, 4, 3)), np.zeros((2, 2, 4, 3)))
        defm = deformation_gradient(jets, SCALES)
        np.testing.assert_array_equal(_f_array(defm), np.tile(np.eye(2), (4, 1, 1)))
        assert np.all(defm.det.value == 1.0)

    def test_homogeneous_stretch(self):
        s = 1.3
        tape = Tape()
        jets = _jets(tape, np.zeros((3, 3)), _grad_for_stretch(3, s),
                     np.zeros((2, 2, 3, 3)))
        defm = deformation_gradient(jets, SCALES)
        f = _f_array(defm)
        np.testing.assert_allclose(f[:, 0, 0], s, rtol=1e-14)
        np.testing.assert_allclose(f[:, 1, 1], 1.0 / s, rtol=1e-14)
        np.testing.assert_allclose(defm.det.value, 1.0, rtol=1e-14)

    def test_determinant_matches_direct_computation(self, rng):
        grad = rng.normal(size=(2, 20, 3)) * 0.5
        tape = Tape()
        jets = _jets(tape, np.zeros((20, 3)), grad, np.zeros((2, 2, 20, 3)))
        defm = deformation_gradient(jets, SCALES)
        direct = np.linalg.det(_f_array(defm))
        np.testing.assert_allclose(defm.det.value, direct, rtol=1e-12)

    def test_gradient_required(self):
        tape = Tape()
        jets = constant_jets(tape, np.zeros((3, 3)))
        with pytest.raises(Exception):
            deformation_gradient(jets, SCALES)


class TestPk1Stress:
    def test_identity_with_zero_pressure(self):
        tape = Tape()
        jets = _jets(tape, np.zeros((3, 3)), np.zeros((2, 3, 3)))
        defm = deformation_gradient(jets, SCALES, need_derivatives=False)
        state = pk1_stress(defm, tape.leaf(np.zeros(3), constant=True))
        np.testing.assert_array_equal(state.sigma[0][0].value, np.ones(3))
        np.testing.assert_array_equal(state.sigma[1][1].value, np.ones(3))
        np.testing.assert_array_equal(state.sigma[0][1].value, np.zeros(3))

    def test_identity_with_unit_pressure_is_stress_free(self):
        tape = Tape()
        jets = _jets(tape, np.zeros((3, 3)), np.zeros((2, 3, 3)))
        defm = deformation_gradient(jets, SCALES, need_derivatives=False)
        state = pk1_stress(defm, tape.leaf(np.ones(3), constant=True))
        for i in range(2):
            for j in range(2):
                np.testing.assert_allclose(state.sigma[i][j].value, 0.0, atol=1e-15)

    def test_identity_with_any_pressure_is_scaled_identity(self, rng):
        p = rng.normal(size=5)
        tape = Tape()
        jets = _jets(tape, np.zeros((5, 3)), np.zeros((2, 5, 3)))
        defm = deformation_gradient(jets, SCALES, need_derivatives=False)
        state = pk1_stress(defm, tape.leaf(p, constant=True))
        np.testing.assert_allclose(state.sigma[0][0].value, 1.0 - p, rtol=1e-15)
        np.testing.assert_allclose(state.sigma[1][1].value, 1.0 - p, rtol=1e-15)
        assert np.all(state.sigma[0][1].value == 0.0)
        assert np.all(state.sigma[1][0].value == 0.0)

    def test_uniaxial_stretch_closed_form(self):
        s = 1.1
        tape = Tape()
        jets = _jets(tape, np.zeros((2, 3)), _grad_for_stretch(2, s))
        defm = deformation_gradient(jets, SCALES, need_derivatives=False)
        state = pk1_stress(defm, tape.leaf(np.full(2, s**-2.0), constant=True))
        np.testing.assert_allclose(state.sigma[0][0].value, s - s**-3.0, rtol=1e-13)
        np.testing.assert_allclose(state.sigma[1][1].value, 0.0, atol=1e-14)

    def test_near_singular_deformation_names_the_point(self):
        tape = Tape()
        grad = np.zeros((2, 2, 3))
        grad[0, 1, 0] = -1.0 / K  # F_xx = 0 at point 1
        grad[1, 1, 1] = -1.0 / K
        jets = _jets(tape, np.zeros((2, 3)), grad)
        coords = np.array([[0.1, 0.2], [0.7, 0.8]])
        defm = deformation_gradient(jets, SCALES, coords=coords, need_derivatives=False)
        with pytest.raises(SingularDeformationError, match="0.7"):
            pk1_stress(defm, tape.leaf(np.zeros(2), constant=True))


class TestIncompressibility:
    def test_identity(self):
        tape = Tape()
        jets = _jets(tape, np.zeros((2, 3)), np.zeros((2, 2, 3)))
        defm = deformation_gradient(jets, SCALES, need_derivatives=False)
        assert np.all(incompressibility_residual(defm).value == 0.0)

    def test_area_preserving_diagonal(self):
        tape = Tape()
        grad = np.zeros((2, 1, 3))
        grad[0, :, 0] = (2.0 - 1.0) / K
        grad[1, :, 1] = (0.5 - 1.0) / K
        jets = _jets(tape, np.zeros((1, 3)), grad)
        defm = deformation_gradient(jets, SCALES, need_derivatives=False)
        np.testing.assert_allclose(incompressibility_residual(defm).value, 0.0, atol=1e-14)

    def test_dilated_diagonal(self):
        tape = Tape()
        grad = np.zeros((2, 1, 3))
        grad[0, :, 0] = (1.1 - 1.0) / K
        jets = _jets(tape, np.zeros((1, 3)), grad)
        defm = deformation_gradient(jets, SCALES, need_derivatives=False)
        np.testing.assert_allclose(incompressibility_residual(defm).value, 0.1, rtol=1e-12)

    def test_rotation_invariance(self, rng):
        """det(R F) = det F for any rotation R."""
        theta = rng.uniform(0, 2 * np.pi)
        R = np.array([[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]])
        F = np.eye(2) + 0.3 * rng.normal(size=(2, 2))
        np.testing.assert_allclose(np.linalg.det(R @ F), np.linalg.det(F), rtol=1e-12)


class TestHyperPdeResidual:
    def test_homogeneous_state_residual_is_exactly_zero(self):
        s = 1.2
        tape = Tape()
        n = 4
        value = np.zeros((n, 3))
        value[:, 2] = s**-2.0
        jets = _jets(tape, value, _grad_for_stretch(n, s), np.zeros((2, 2, n, 3)))
        defm = deformation_gradient(jets, SCALES)
        from pinnload.tape import pluck

        pbar = pluck(jets.value, (slice(None), 2))
        dpbar = [pluck(jets.grad, (m, slice(None), 2)) for m in range(2)]
        res = hyper_pde_residual(pk1_stress(defm, pbar, dpbar))
        for r in res:
            assert np.all(r.value == 0.0)

    def test_linear_pressure_with_identity_deformation(self, rng):
        """F = I and p = a x + b y gives residual = -(a, b)."""
        a, b = 0.7, -0.4
        n = 5
        xbar = rng.uniform(0, 1, (n, 2))
        value = np.zeros((n, 3))
        value[:, 2] = a * xbar[:, 0] + b * xbar[:, 1]
        grad = np.zeros((2, n, 3))
        grad[0, :, 2] = a
        grad[1, :, 2] = b
        tape = Tape()
        jets = _jets(tape, value, grad, np.zeros((2, 2, n, 3)))
        defm = deformation_gradient(jets, SCALES)
        from pinnload.tape import pluck

        pbar = pluck(jets.value, (slice(None), 2))
        dpbar = [pluck(jets.grad, (m, slice(None), 2)) for m in range(2)]
        res = hyper_pde_residual(pk1_stress(defm, pbar, dpbar))
        np.testing.assert_allclose(res[0].value, -a, rtol=1e-14)
        np.testing.assert_allclose(res[1].value, -b, rtol=1e-14)

    def test_smooth_field_matches_fd_divergence(self, rng):
        """Assembled residual against a central-difference divergence of the
        PK1 values (independent path)."""
        amp = 0.05

        def displacement(xbar):
            u = np.empty((len(xbar), 2))
            u[:, 0] = amp * np.sin(xbar[:, 0]) * np.cos(xbar[:, 1])
            u[:, 1] = amp * np.cos(xbar[:, 0]) * np.sin(xbar[:, 1])
            return u

        def pressure(xbar):
            return 0.8 + 0.1 * np.sin(xbar[:, 0] + xbar[:, 1])

        def field(xbar):
            return np.concatenate([displacement(xbar), pressure(xbar)[:, None]], axis=1)

        probes = rng.uniform(0.2, 0.8, (40, 2))
        fd_max = fd_residual_check(field, neo_hookean_stress_values(SCALES), probes, h=1e-3)

        # assembled residual from analytic jets of the same field
        n = len(probes)
        x, y = probes[:, 0], probes[:, 1]
        value = field(probes)
        grad = np.zeros((2, n, 3))
        grad[0, :, 0] = amp * np.cos(x) * np.cos(y)
        grad[1, :, 0] = -amp * np.sin(x) * np.sin(y)
        grad[0, :, 1] = -amp * np.sin(x) * np.sin(y)
        grad[1, :, 1] = amp * np.cos(x) * np.cos(y)
        grad[0, :, 2] = 0.1 * np.cos(x + y)
        grad[1, :, 2] = 0.1 * np.cos(x + y)
        hess = np.zeros((2, 2, n, 3))
        hess[0, 0, :, 0] = -amp * np.sin(x) * np.cos(y)
        hess[0, 1, :, 0] = hess[1, 0, :, 0] = -amp * np.cos(x) * np.sin(y)
        hess[1, 1, :, 0] = -amp * np.sin(x) * np.cos(y)
        hess[0, 0, :, 1] = -amp * np.cos(x) * np.sin(y)
        hess[0, 1, :, 1] = hess[1, 0, :, 1] = -amp * np.sin(x) * np.cos(y)
        hess[1, 1, :, 1] = -amp * np.cos(x) * np.sin(y)

        tape = Tape()
        jets = _jets(tape, value, grad, hess)
        defm = deformation_gradient(jets, SCALES)
        from pinnload.tape import pluck

        pbar = pluck(jets.value, (slice(None), 2))
        dpbar = [pluck(jets.grad, (m, slice(None), 2)) for m in range(2)]
        res = hyper_pde_residual(pk1_stress(defm, pbar, dpbar))
        assembled = np.stack([r.value for r in res], axis=1)
        assert np.max(np.abs(assembled)) > 1e-3  # the probe field is not trivial
        fd = _fd_divergence(field, probes)
        rel = np.max(np.abs(assembled - fd)) / np.max(np.abs(fd))
        assert rel < 1e-4


def _fd_divergence(field, probes, h=1e-3):
    """Central-difference divergence of the PK1 values over probe points."""
    ev = neo_hookean_stress_values(SCALES)

    def jets_fd(x):
        val = field(x)
        grad = np.empty((2, len(x), 3))
        for k in range(2):
            e = np.zeros(2)
            e[k] = h
            grad[k] = (field(x + e) - field(x - e)) / (2 * h)
        return val, grad

    out = np.zeros((len(probes), 2))
    for k in range(2):
        e = np.zeros(2)
        e[k] = h
        sp = ev(*jets_fd(probes + e))
        sm = ev(*jets_fd(probes - e))
        out += (sp[:, :, k] - sm[:, :, k]) / (2 * h)
    return out
