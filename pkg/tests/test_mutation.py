"""PMMH kernel: proposals, acceptance arithmetic, ESJD accounting."""

import math

import numpy as np
import pytest

from smc2adapt.filtering import StateCloud, run_filter
from smc2adapt.models import Ricker
from smc2adapt.models.base import log_prior_unconstrained
from smc2adapt.mutation import (
    ProposalSpec,
    ThetaParticle,
    default_proposal,
    esjd_increment,
    log_accept_ratio,
    make_proposal,
    pmmh_step,
    pmmh_sweep,
)
from smc2adapt.rngs import substream

from conftest import ConstDensityModel


# ---------------------------------------------------------------- proposals


def test_default_proposal_two_particle_cell():
    spec = default_proposal(np.array([[0.0], [2.0]]))
    assert spec.cov[0, 0] == pytest.approx(1.0)
    assert spec.scale == pytest.approx(5.6644)
    assert spec.cov_inv[0, 0] == pytest.approx(1.0)


def test_default_proposal_scale_dim5():
    rng = np.random.default_rng(0)
    spec = default_proposal(rng.normal(size=(40, 5)))
    assert spec.scale == pytest.approx(2.38**2 / 5)


def test_default_proposal_weighted():
    # weighted covariance without the Bessel correction
    phis = np.array([[0.0], [1.0], [2.0]])
    w = np.array([0.5, 0.25, 0.25])
    spec = default_proposal(phis, w)
    mean = 0.75
    expected = 0.5 * mean**2 + 0.25 * (1 - mean) ** 2 + 0.25 * (2 - mean) ** 2
    assert spec.cov[0, 0] == pytest.approx(expected)


def test_degenerate_ensemble_gets_jitter():
    spec = default_proposal(np.zeros((10, 3)))
    assert np.all(np.isfinite(spec.chol))
    assert np.all(np.diag(spec.chol) > 0.0)


def test_make_proposal_rank_deficient_covariance():
    # collapsed ensemble: Cholesky pivots are barely positive while plain
    # LU inversion hits an exact zero; the jitter guard must cover both
    cov = np.array(
        [
            [8.7007338908524, -4.716687672915493, -0.6151430148869991, 2.641612568538344],
            [-4.716687672915493, 3.031572695868104, 0.4130290886042278, -1.3790951689923239],
            [-0.6151430148869991, 0.4130290886042278, 0.0584011022257673, -0.17684849888994492],
            [2.641612568538344, -1.3790951689923239, -0.1768484988899449, 0.8086064415888026],
        ]
    )
    spec = make_proposal(cov, 2.38**2 / 4)
    assert np.all(np.isfinite(spec.chol))
    assert np.all(np.isfinite(spec.cov_inv))


def test_make_proposal_symmetrizes():
    cov = np.array([[2.0, 0.3], [0.1, 1.0]])
    spec = make_proposal(cov, 1.0)
    np.testing.assert_allclose(spec.cov, spec.cov.T)
    np.testing.assert_allclose(spec.chol @ spec.chol.T, spec.scale * spec.cov, atol=1e-12)


# ---------------------------------------------------------------- esjd


def test_esjd_increment_cells():
    eye = np.eye(1)
    assert esjd_increment(np.array([1.0]), np.array([1.0]), 0.7, eye) == 0.0
    assert esjd_increment(np.array([0.0]), np.array([3.0]), 0.0, eye) == 0.0
    assert esjd_increment(np.array([0.0]), np.array([2.0]), 0.5, eye) == pytest.approx(2.0)


def test_esjd_increment_uses_metric():
    cov_inv = np.linalg.inv(np.array([[4.0, 0.0], [0.0, 1.0]]))
    val = esjd_increment(np.zeros(2), np.array([2.0, 1.0]), 1.0, cov_inv)
    assert val == pytest.approx(4.0 / 4.0 + 1.0)


# ---------------------------------------------------------------- acceptance arithmetic


def test_accept_ratio_symmetric_case():
    assert log_accept_ratio(-5.0, -5.0, -1.0, -1.0) == 0.0


def test_accept_ratio_zero_likelihood_proposal():
    assert log_accept_ratio(-5.0, -np.inf, -1.0, -1.0) == -np.inf


def test_accept_ratio_tempered_cell():
    # likelihood ratio 0.25 at exponent 0.5 gives alpha 0.5
    ratio = log_accept_ratio(0.0, math.log(0.25), -1.0, -1.0, temper=0.5)
    assert math.exp(ratio) == pytest.approx(0.5)


def test_accept_ratio_prior_only_at_temper_zero():
    # at g = 0 the likelihood must not contribute at all
    ratio = log_accept_ratio(-50.0, -9000.0, -1.0, -3.0, temper=0.0)
    assert ratio == pytest.approx(-2.0)
    assert log_accept_ratio(-50.0, -np.inf, -1.0, -3.0, temper=0.0) == pytest.approx(-2.0)


def test_accept_ratio_reciprocal_symmetry():
    rng = np.random.default_rng(1)
    for _ in range(50):
        ll = rng.normal(size=2)
        lp = rng.normal(size=2)
        g = rng.random()
        fwd = log_accept_ratio(ll[0], ll[1], lp[0], lp[1], g)
        bwd = log_accept_ratio(ll[1], ll[0], lp[1], lp[0], g)
        assert fwd == pytest.approx(-bwd, abs=1e-12)


def test_accept_ratio_reference_target():
    # restart target ref^(1-g) (prior lik)^g
    g = 0.3
    fwd = log_accept_ratio(-2.0, -1.0, -0.5, -0.25, g, ref_cur=-4.0, ref_prop=-3.0)
    expected = ((1 - g) * -3.0 + g * (-0.25 + -1.0)) - ((1 - g) * -4.0 + g * (-0.5 + -2.0))
    assert fwd == pytest.approx(expected, abs=1e-12)


# ---------------------------------------------------------------- pmmh_step


def _const_particle(model, y, nx, seed):
    theta = np.array([model.default_theta[0]])
    out = run_filter(model, theta, y, len(y), nx, substream(seed, 2))
    return ThetaParticle(theta.copy(), out.cloud)


def test_pmmh_step_alpha_matches_target_ratio(const_model):
    # constant model: log-lik is exactly t*c, so alpha is fully predictable
    y = np.zeros(6)
    proposal = make_proposal(np.eye(1), 1.0)
    n_accepts = 0
    for rep in range(40):
        particle = _const_particle(const_model, y, 10, rep)
        phi0 = particle.phi.copy()
        target0 = log_prior_unconstrained(const_model, phi0) + 6.0 * phi0[0]
        new, acc, mahal, alpha, evals = pmmh_step(
            particle, const_model, y, 6, 1.0, proposal, 10, substream(rep, 6)
        )
        assert evals == 60
        if acc:
            n_accepts += 1
            target1 = log_prior_unconstrained(const_model, new.phi) + 6.0 * new.phi[0]
            assert alpha == pytest.approx(min(1.0, math.exp(target1 - target0)), rel=1e-12)
            jump = float(new.phi[0] - phi0[0])
            assert mahal == pytest.approx(jump * jump, rel=1e-12)
            assert new.cloud.t == 6  # adopted the freshly filtered cloud
    assert n_accepts > 0


def test_pmmh_step_out_of_support_skips_filter():
    model = Ricker()
    y = np.array([3.0, 7.0, 1.0])
    theta = model.default_theta
    out = run_filter(model, theta, y, 3, 20, substream(0, 2))
    particle = ThetaParticle(theta.copy(), out.cloud)
    # a huge random-walk step leaves the uniform box almost surely
    proposal = make_proposal(np.eye(3) * 1e8, 1.0)
    new, acc, mahal, alpha, evals = pmmh_step(
        particle, model, y, 3, 1.0, proposal, 20, substream(5, 6)
    )
    assert not acc
    assert alpha == 0.0
    assert evals == 0  # no filter was run
    assert new is particle


def test_pmmh_step_degenerate_proposal_rejected(const_model):
    # impossible data kills every proposed filter in a model that can die
    model = Ricker()
    y = np.array([3.0, -1.0])
    theta = model.default_theta
    cloud = StateCloud(np.ones((10, 1)), np.full(10, 0.1), -5.0, 2)  # pretend finite estimate
    particle = ThetaParticle(theta.copy(), cloud)
    proposal = make_proposal(np.eye(3) * 1e-4, 1.0)
    new, acc, mahal, alpha, evals = pmmh_step(
        particle, model, y, 2, 1.0, proposal, 10, substream(6, 6)
    )
    assert not acc
    assert alpha == 0.0
    assert new is particle
    assert evals > 0  # the filter ran before dying


def test_pmmh_step_certain_acceptance_from_dead_particle(const_model):
    # a dead current particle accepts any live proposal
    y = np.zeros(4)
    dead_cloud = StateCloud(np.zeros((10, 1)), np.full(10, 0.1), -np.inf, 4)
    particle = ThetaParticle(np.array([0.0]), dead_cloud)
    proposal = make_proposal(np.eye(1) * 1e-4, 1.0)
    new, acc, mahal, alpha, evals = pmmh_step(
        particle, const_model, y, 4, 1.0, proposal, 10, substream(7, 6)
    )
    assert acc
    assert alpha == 1.0
    assert new.log_lik == pytest.approx(4 * new.phi[0], rel=1e-12)


def test_pmmh_sweep_esjd_is_mean_of_increments(const_model):
    y = np.zeros(5)
    particles = [_const_particle(const_model, y, 8, 100 + i) for i in range(12)]
    proposal = make_proposal(np.eye(1), 1.0)

    # replicate the sweep manually with the same streams
    manual = []
    for n, p in enumerate(particles):
        manual.append(
            pmmh_step(
                p.copy(), const_model, y, 5, 1.0, proposal, 8, substream(55, 9, n)
            )
        )
    report = pmmh_sweep(
        particles, const_model, y, 5, 1.0, proposal, 8, lambda n: substream(55, 9, n)
    )
    expected_esjd = np.mean([m[2] * m[3] for m in manual])
    assert report.esjd == pytest.approx(expected_esjd, rel=1e-12)
    assert report.accepted == sum(int(m[1]) for m in manual)
    assert report.proposed == 12
    assert report.ll_count == sum(m[4] for m in manual)
