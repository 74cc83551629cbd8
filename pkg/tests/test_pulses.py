import json
import math

import numpy as np
import pytest
from scipy.optimize import brentq

from compulse.pulses import (
    ErrorModel,
    PulseSequence,
    build_composite_pi,
    build_rectangular_pi,
    gaussian_nodes,
    lorentzian_nodes,
    sigma_from_fwhm,
    tensor_quadrature,
)
from compulse.su2 import SIGMA_X, SIGMA_Y, ErrorPoint, sequence_propagator
from compulse.fidelity import TargetGate, channel_avg_fidelity


class TestBuilders:
    def test_rectangular_pi_x(self):
        seq = build_rectangular_pi(0.0)
        assert len(seq.segments) == 1
        assert seq.total_angle == pytest.approx(np.pi)
        U = sequence_propagator(seq, ErrorPoint(0.0, 1.0))
        assert np.allclose(U, -1j * SIGMA_X, atol=1e-15)

    def test_rectangular_pi_y(self):
        U = sequence_propagator(build_rectangular_pi(np.pi / 2), ErrorPoint(0.0, 1.0))
        assert np.allclose(U, -1j * SIGMA_Y, atol=1e-15)

    def test_composite_structure(self):
        seq = build_composite_pi(1.0, -0.5, 0.2)
        assert len(seq.segments) == 10
        assert seq.total_angle == pytest.approx(12 * np.pi)
        phases = [s.phase for s in seq.segments[:5]]
        assert phases == pytest.approx([0.2, 1.2, -0.3, 1.2, 0.2])
        # the 5-piece block repeats exactly
        assert seq.segments[:5] == seq.segments[5:]

    def test_collinear_phases_collapse_to_12pi_rotation(self):
        seq = build_composite_pi(0.0, 0.0, 0.0)
        U = sequence_propagator(seq, ErrorPoint(0.0, 1.0))
        # R_x(12 pi) = +I: not a pi pulse at all
        assert np.allclose(U, np.eye(2), atol=1e-10)

    def test_composite_propagator_unitary_at_any_error_point(self):
        rng = np.random.default_rng(17)
        seq = build_composite_pi(1.3, -2.1, 0.4)
        for _ in range(20):
            err = ErrorPoint(rng.uniform(-3, 3), rng.uniform(0, 2))
            U = sequence_propagator(seq, err)
            assert np.max(np.abs(U.conj().T @ U - np.eye(2))) < 1e-12

    def test_serialization_roundtrip(self):
        seq = build_composite_pi(phi1=0.3)
        doc = json.loads(seq.to_json())
        assert set(doc) == {"label", "segments"}
        assert set(doc["segments"][0]) == {"angle_rad", "phase_rad", "amp"}
        back = PulseSequence.from_json_dict(doc)
        assert back == seq

    def test_duration(self):
        assert build_rectangular_pi().duration_us(10.0) == pytest.approx(0.05)
        assert build_composite_pi().duration_us(10.0) == pytest.approx(0.6)


class TestGaussianNodes:
    def test_single_node(self):
        nodes, weights = gaussian_nodes(0.0, 1)
        assert nodes == pytest.approx([0.0])
        assert weights == pytest.approx([1.0])

    def test_two_nodes_at_plus_minus_sigma(self):
        nodes, weights = gaussian_nodes(0.7, 2)
        assert sorted(nodes) == pytest.approx([-0.7, 0.7])
        assert weights == pytest.approx([0.5, 0.5])

    def test_fwhm_conversion(self):
        # 2 MHz linewidth at a 10 MHz Rabi rate
        assert sigma_from_fwhm(2.0) / 10.0 == pytest.approx(0.08493, abs=5e-6)

    def test_moments(self):
        nodes, weights = gaussian_nodes(0.3, 17)
        assert abs(np.dot(weights, nodes)) < 1e-10
        assert np.dot(weights, nodes**2) == pytest.approx(0.09, abs=1e-10)

    def test_invalid_count(self):
        with pytest.raises(ValueError):
            gaussian_nodes(1.0, 0)


class TestLorentzianNodes:
    def test_zero_width(self):
        nodes, weights = lorentzian_nodes(0.0, 1, 0.3)
        assert nodes == pytest.approx([1.0])
        assert weights == pytest.approx([1.0])

    def test_symmetric_about_one(self):
        nodes, _ = lorentzian_nodes(0.05, 12, 0.3)
        assert np.max(np.abs((nodes - 1.0) + (nodes[::-1] - 1.0))) < 1e-12

    def test_median_node_and_inverse_cdf_oracle(self):
        gamma, k, cutoff = 0.05, 11, 0.3
        nodes, weights = lorentzian_nodes(gamma, k, cutoff)
        assert nodes[k // 2] == pytest.approx(1.0, abs=1e-15)
        assert np.sum(weights) == pytest.approx(1.0, abs=1e-15)

        # numeric inverse CDF of the truncated Lorentzian by root finding
        norm = 2.0 * math.atan(cutoff / gamma)

        def cdf(x):
            return (math.atan((x - 1.0) / gamma) + math.atan(cutoff / gamma)) / norm

        for i, node in enumerate(nodes):
            q = (i + 0.5) / k
            x = brentq(lambda t: cdf(t) - q, 1.0 - cutoff, 1.0 + cutoff, xtol=1e-13)
            assert node == pytest.approx(x, abs=1e-9)

    def test_invalid_cutoff(self):
        with pytest.raises(ValueError):
            lorentzian_nodes(0.1, 5, 0.0)


class TestQuadrature:
    def test_single_point(self):
        quad = tensor_quadrature(gaussian_nodes(0.0, 1), lorentzian_nodes(0.0, 1, 0.3))
        assert len(quad) == 1
        assert quad.deltas == pytest.approx([0.0])
        assert quad.epss == pytest.approx([1.0])
        assert quad.weights == pytest.approx([1.0])

    def test_product_size_and_weight_sum(self):
        quad = tensor_quadrature(gaussian_nodes(0.2, 7), lorentzian_nodes(0.03, 5, 0.2))
        assert len(quad) == 35
        assert np.sum(quad.weights) == pytest.approx(1.0, abs=1e-12)

    def test_means(self):
        quad = ErrorModel(0.4, 0.02, 21, 9, 0.25).quadrature()
        assert abs(np.dot(quad.weights, quad.deltas)) < 1e-10
        assert np.dot(quad.weights, quad.epss) == pytest.approx(1.0, abs=1e-10)

    def test_node_list(self):
        quad = ErrorModel(0.1, 0.0, 2, 1).quadrature()
        pts = quad.nodes
        assert all(isinstance(p, ErrorPoint) for p in pts)
        assert pts[0].eps == 1.0


class TestConvergence:
    # the node count needed for 1e-6 doubling stability grows with the
    # ensemble width: the composite's fidelity oscillates on a detuning
    # scale ~ Omega_0 / total_angle once the nodes leave the robust plateau
    @pytest.mark.parametrize(
        "sigma,k", [(0.085, 16), (0.3, 32), (0.4, 128), (1.0, 512)]
    )
    def test_channel_fidelity_converges_in_node_count(self, sigma, k):
        seq = build_composite_pi()
        target = TargetGate.best_equatorial()
        vals = {}
        for kk in (k, 2 * k):
            quad = tensor_quadrature(gaussian_nodes(sigma, kk), lorentzian_nodes(0.0, 1, 0.3))
            vals[kk] = channel_avg_fidelity(seq, target, quad)
        assert abs(vals[k] - vals[2 * k]) < 1e-6
