import json
import warnings

import numpy as np
import pytest

from conftest import random_conjugate_weights
from wavegest.basis import ComplexWeights, fit_weights
from wavegest.dataset_io import Dataset, Demonstration
from wavegest.model import (AmplitudeFloorWarning, ConditioningConstraint,
                            GestureModel, ModelFormatError, WeightIndexMap,
                            align_phases, condition, fit_model, from_logpolar,
                            load_model, sample_model, save_model, to_logpolar,
                            wrap_angle)


def precision_oracle(mu, S, b, xb):
    """Conditional Gaussian read off the inverse of the full covariance."""
    a = np.setdiff1d(np.arange(len(mu)), b)
    P = np.linalg.inv(S)
    S_cond = np.linalg.inv(P[np.ix_(a, a)])
    mu_cond = mu[a] - S_cond @ P[np.ix_(a, b)] @ (xb - mu[b])
    return a, mu_cond, S_cond


def random_model(rng, D=2, K=1, lam=0.0):
    dim = D * (2 * K + 1)
    A = rng.standard_normal((dim, dim))
    S = A @ A.T + 0.1 * np.eye(dim)
    return GestureModel(rng.standard_normal(dim), S, D, K, 2.0, lam,
                        np.zeros(D * K))


def natural_constraint(imap, i, x):
    """Constraint whose internal (log-polar) value is ``x`` at index ``i``."""
    dof, k, comp = imap.descriptor(i)
    value = np.exp(x) if comp == "amp" else x
    return ConditioningConstraint(dof, k, comp, value)


# index map -----------------------------------------------------------------

def test_index_map_layout_and_bijection():
    imap = WeightIndexMap(3, 4)
    assert imap.dim == 27
    seen = [imap.descriptor(i) for i in range(imap.dim)]
    assert [imap.index(*s) for s in seen] == list(range(imap.dim))
    for d in range(3):
        comps = [c for dd, _, c in seen if dd == d]
        assert comps.count("dc") == 1
        assert comps.count("amp") == 4 and comps.count("phase") == 4
    assert imap.index(1, 0, "dc") == 9
    assert imap.index(1, 2, "amp") == 11
    assert imap.index(1, 2, "phase") == 15
    with pytest.raises(IndexError):
        imap.index(0, 5, "amp")


# log-polar -----------------------------------------------------------------

def test_to_logpolar_unit_modulus():
    K = 6
    c = np.full((1, 2 * K + 1), 1e-3, complex)
    c[0, K + 5], c[0, K - 5] = np.exp(0.7j), np.exp(-0.7j)
    c[0, K] = -2.0
    x = to_logpolar(ComplexWeights(c))
    imap = WeightIndexMap(1, K)
    assert abs(x[imap.index(0, 5, "amp")]) < 1e-12
    assert x[imap.index(0, 5, "phase")] == pytest.approx(0.7, abs=1e-12)
    assert x[imap.index(0, 0, "dc")] == -2.0


def test_zero_weight_is_floored_with_warning():
    c = np.zeros((1, 7), complex)
    c[0, 3] = 1.0
    with pytest.warns(AmplitudeFloorWarning):
        x = to_logpolar(ComplexWeights(c), eps_r=1e-8)
    imap = WeightIndexMap(1, 3)
    assert x[imap.index(0, 3, "amp")] == np.log(1e-8)
    assert x[imap.index(0, 3, "phase")] == 0.0


def test_to_logpolar_rejects_broken_symmetry():
    c = np.zeros((1, 3), complex)
    c[0, 2] = 1.0
    with pytest.raises(ValueError, match="conjugate"):
        to_logpolar(ComplexWeights(c))


def test_phase_in_principal_interval(rng):
    c = random_conjugate_weights(rng, 3, 8)
    c[0, 8 + 1] = -1.0 - 0.0j
    c[0, 8 - 1] = -1.0 + 0.0j
    x = to_logpolar(ComplexWeights(c))
    phases = x[WeightIndexMap(3, 8).component_indices("phase")]
    assert np.all(phases > -np.pi) and np.all(phases <= np.pi)
    assert phases[0, 0] == np.pi


def test_logpolar_inverse_pair(rng):
    for _ in range(50):
        c = random_conjugate_weights(rng, 3, 5)
        w = ComplexWeights(c)
        back = from_logpolar(to_logpolar(w), 5)
        assert np.max(np.abs(back.coeffs - c)) <= 1e-12
        x = to_logpolar(w)
        assert np.max(np.abs(to_logpolar(from_logpolar(x, 5)) - x)) <= 1e-12


def test_from_logpolar_zero_vector():
    w = from_logpolar(np.zeros(2 * 7), 3)
    np.testing.assert_array_equal(w.coeffs[:, 3], 0)
    np.testing.assert_array_equal(w.coeffs[:, 4:], 1)
    np.testing.assert_array_equal(w.coeffs[:, :3], 1)


def test_from_logpolar_definition():
    K = 6
    x = np.zeros(2 * K + 1)
    x[5], x[K + 5] = np.log(2), 0.7
    w = from_logpolar(x, K)
    assert abs(w.at(5)[0] - 2 * np.exp(0.7j)) <= 1e-15
    assert w.at(-5)[0] == np.conj(w.at(5)[0])


# phase alignment -----------------------------------------------------------

def _single_phase_vectors(phases):
    # D=1, K=1 vectors: [dc, ln r, theta]
    return [np.array([0.0, 0.0, p]) for p in phases]


def test_align_keeps_clustered_phases():
    out, ref = align_phases(_single_phase_vectors([0.1, 0.2]), 1)
    np.testing.assert_allclose([v[2] for v in out], [0.1, 0.2], atol=1e-15)


def test_align_across_branch_cut():
    out, ref = align_phases(_single_phase_vectors([3.1, -3.1]), 1)
    np.testing.assert_allclose([v[2] for v in out], [3.1, -3.1 + 2 * np.pi],
                               atol=1e-12)
    assert out[1][2] == pytest.approx(3.18318530717958, abs=1e-12)
    assert abs(ref[0]) == pytest.approx(np.pi)


def test_align_is_invariant_to_2pi_shifts(rng):
    K = 4
    X = [to_logpolar(ComplexWeights(random_conjugate_weights(rng, 2, K)))
         for _ in range(5)]
    out1, _ = align_phases(X, K)
    shifted = [x.copy() for x in X]
    idx = WeightIndexMap(2, K).component_indices("phase").reshape(-1)
    shifted[2][idx] += 2 * np.pi
    out2, _ = align_phases(shifted, K)
    np.testing.assert_allclose(np.array(out1), np.array(out2), atol=1e-12)
    # amplitudes and offsets untouched
    other = np.setdiff1d(np.arange(len(X[0])), idx)
    np.testing.assert_array_equal(np.array(out1)[:, other], np.array(X)[:, other])


def test_align_within_pi_of_reference(rng):
    K = 3
    X = [rng.uniform(-np.pi, np.pi, 2 * (2 * K + 1)) for _ in range(9)]
    out, ref = align_phases(X, K)
    idx = WeightIndexMap(2, K).component_indices("phase").reshape(-1)
    assert np.all(np.abs(np.array(out)[:, idx] - ref) <= np.pi + 1e-12)


# fitting -------------------------------------------------------------------

def test_single_demo_model(rng):
    y = rng.standard_normal((40, 2))
    ds = Dataset((Demonstration(y, 0.05),))
    model = fit_model(ds, 4, lam=1e-6)
    expected = to_logpolar(fit_weights(ds[0], 4))
    np.testing.assert_allclose(model.mu, expected, atol=1e-15)
    np.testing.assert_allclose(model.sigma, 1e-6 * np.eye(model.dim), atol=0)
    assert model.ref_duration == pytest.approx(2.0)


def test_symmetric_pair_variance():
    a = 0.3
    ds = Dataset((Demonstration(np.full((20, 1), 1 + a), 0.1),
                  Demonstration(np.full((20, 1), 1 - a), 0.1)))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", AmplitudeFloorWarning)
        model = fit_model(ds, 2, lam=0.0)
    assert model.sigma[0, 0] == pytest.approx(a * a, rel=1e-12)
    assert model.mu[0] == pytest.approx(1.0)


def test_covariance_normalization_and_loading(small_dataset):
    K, lam = 6, 1e-3
    model = fit_model(small_dataset, K, lam=lam)
    X, _ = align_phases([to_logpolar(fit_weights(d, K)) for d in small_dataset], K)
    raw = np.cov(np.array(X), rowvar=False, bias=True)
    loaded = raw + lam * np.trace(raw) / raw.shape[0] * np.eye(raw.shape[0])
    np.testing.assert_allclose(model.sigma, loaded, atol=1e-12)
    assert np.max(np.abs(model.sigma - model.sigma.T)) <= 1e-12
    assert np.linalg.eigvalsh(model.sigma).min() > 0
    durations = [d.duration for d in small_dataset]
    assert model.ref_duration == pytest.approx(np.mean(durations))


def test_protocol_dimension(rng):
    demos = [Demonstration(rng.standard_normal((600 + 10 * m, 5)), 0.01)
             for m in range(15)]
    model = fit_model(Dataset(tuple(demos)), 25)
    assert model.dim == 255 == 5 * 51
    assert np.linalg.eigvalsh(model.sigma).min() > 0


def test_fit_rejects_too_many_harmonics(small_dataset):
    with pytest.raises(ValueError, match="exceeds"):
        fit_model(small_dataset, 60)


# sampling ------------------------------------------------------------------

def test_sampling_deterministic(rng):
    model = random_model(rng)
    np.testing.assert_array_equal(sample_model(model, 3), sample_model(model, 3))
    assert not np.array_equal(sample_model(model, 3), sample_model(model, 4))


def test_tiny_covariance_clusters_at_mean():
    model = GestureModel(np.arange(4.0), 1e-20 * np.eye(4), 4, 0, 1.0, 0.0)
    np.testing.assert_allclose(sample_model(model, 0), np.arange(4.0), atol=1e-8)


def test_sampling_moments():
    S = np.array([[1.0, 0.5, 0.3, 0.2],
                  [0.5, 2.0, 0.4, 0.6],
                  [0.3, 0.4, 1.5, 0.5],
                  [0.2, 0.6, 0.5, 1.0]])
    mu = np.array([0.5, -1.0, 2.0, 0.0])
    model = GestureModel(mu, S, 4, 0, 1.0, 0.0)
    N = 100_000
    x = sample_model(model, 2024, size=N)
    assert np.all(np.abs(x.mean(axis=0) - mu) <= 5 * np.sqrt(np.diag(S) / N))
    C = np.cov(x, rowvar=False)
    assert np.all(np.abs(C - S) <= 0.05 * np.abs(S))


def test_sampling_rejects_indefinite_covariance():
    S = np.diag([1.0, -1.0])
    model = GestureModel(np.zeros(2), S, 2, 0, 1.0, 0.0)
    with pytest.raises(np.linalg.LinAlgError):
        sample_model(model, 0)


# conditioning --------------------------------------------------------------

def test_condition_matches_precision_oracle():
    rng = np.random.default_rng(7)
    for trial in range(100):
        model = random_model(rng)
        nb = rng.integers(1, 4)
        b = np.sort(rng.choice(6, nb, replace=False))
        xb = model.mu[b] + rng.standard_normal(nb)
        imap = model.index_map
        for j, i in enumerate(b):
            if imap.descriptor(i)[2] == "phase":
                xb[j] = wrap_angle(xb[j])
        cons = [natural_constraint(imap, i, v) for i, v in zip(b, xb)]
        out = condition(model, cons)
        a, mu_o, S_o = precision_oracle(model.mu, model.sigma, b, xb)
        scale = np.max(np.abs(model.sigma))
        np.testing.assert_allclose(out.mu[a], mu_o, rtol=1e-9,
                                   atol=1e-9 * np.max(np.abs(mu_o)))
        np.testing.assert_allclose(out.sigma[np.ix_(a, a)], S_o, rtol=1e-9,
                                   atol=1e-9 * scale)
        np.testing.assert_allclose(out.mu[b], xb, rtol=1e-13)
        assert np.all(out.sigma[b, :] == 0) and np.all(out.sigma[:, b] == 0)
        gap = model.sigma[np.ix_(a, a)] - out.sigma[np.ix_(a, a)]
        assert np.linalg.eigvalsh(gap).min() >= -1e-10


def test_amplitude_clamp_is_exact(rng):
    model = random_model(rng, D=3, K=12, lam=1e-6)
    out = condition(model, [ConditioningConstraint(2, 10, "amp", 5.0)])
    i = model.index_map.index(2, 10, "amp")
    assert out.mu[i] == np.log(5.0)
    assert out.sigma[i, i] == 0.0


def test_block_diagonal_independence(rng):
    D, K = 2, 2
    dim = D * (2 * K + 1)
    S = np.zeros((dim, dim))
    for d in range(D):
        A = rng.standard_normal((5, 5))
        S[d * 5:(d + 1) * 5, d * 5:(d + 1) * 5] = A @ A.T + np.eye(5)
    model = GestureModel(rng.standard_normal(dim), S, D, K, 1.0, 0.0)
    for comp, k in (("dc", 0), ("amp", 1), ("phase", 2)):
        val = 1.3 if comp == "amp" else 0.4
        out = condition(model, [ConditioningConstraint(0, k, comp, val)])
        np.testing.assert_allclose(out.mu[5:], model.mu[5:], atol=1e-12)
        np.testing.assert_allclose(out.sigma[5:, 5:], S[5:, 5:], atol=1e-12)


def test_condition_idempotent_and_commutative(rng):
    model = random_model(rng, D=2, K=3, lam=1e-6)
    c1 = ConditioningConstraint(0, 2, "amp", 1.7)
    c2 = ConditioningConstraint(1, 1, "phase", -2.0)
    once = condition(model, [c1])
    twice = condition(once, [c1])
    assert np.max(np.abs(once.mu - twice.mu)) <= 1e-12
    assert np.max(np.abs(once.sigma - twice.sigma)) <= 1e-12
    seq = condition(once, [c2])
    joint = condition(model, [c1, c2])
    assert np.max(np.abs(seq.mu - joint.mu)) <= 1e-9
    assert np.max(np.abs(seq.sigma - joint.sigma)) <= 1e-9


def test_condition_all_but_one(rng):
    model = random_model(rng)
    b = np.arange(1, 6)
    xb = model.mu[b] + 0.3
    imap = model.index_map
    xb = np.array([wrap_angle(v) if imap.descriptor(i)[2] == "phase" else v
                   for i, v in zip(b, xb)])
    out = condition(model, [natural_constraint(imap, i, v) for i, v in zip(b, xb)])
    a, mu_o, S_o = precision_oracle(model.mu, model.sigma, b, xb)
    assert abs(out.mu[0] - mu_o[0]) <= 1e-9
    assert out.sigma[0, 0] == pytest.approx(S_o[0, 0], rel=1e-9)


def test_phase_constraint_unwrapped_to_reference():
    mu = np.array([0.0, 0.0, 3.0])
    S = np.array([[1.0, 0.0, 0.5], [0.0, 1.0, 0.0], [0.5, 0.0, 1.0]])
    model = GestureModel(mu, S, 1, 1, 1.0, 0.0, phase_ref=[3.0])
    out = condition(model, [ConditioningConstraint(0, 1, "phase", -3.0)])
    target = -3.0 + 2 * np.pi
    assert out.mu[2] == pytest.approx(target)
    assert out.mu[0] == pytest.approx(0.5 * (target - 3.0))


def test_condition_errors(rng):
    model = random_model(rng)
    with pytest.raises(ValueError, match="duplicate"):
        condition(model, [ConditioningConstraint(0, 1, "amp", 1.0),
                          ConditioningConstraint(0, 1, "amp", 2.0)])
    with pytest.raises(ValueError, match="> 0"):
        ConditioningConstraint(0, 1, "amp", 0.0)
    with pytest.raises(ValueError, match="pi"):
        ConditioningConstraint(0, 1, "phase", 4.0)
    with pytest.raises(ValueError, match="no free"):
        condition(model, [natural_constraint(model.index_map, i, 0.1)
                          for i in range(6)])
    fixed = condition(model, [ConditioningConstraint(0, 0, "dc", 0.5)])
    with pytest.raises(ValueError, match="already fixed"):
        condition(fixed, [ConditioningConstraint(0, 0, "dc", 0.6)])


def test_singular_constrained_block():
    S = np.ones((3, 3))
    model = GestureModel(np.zeros(3), S + np.diag([0, 0, 1.0]), 1, 1, 1.0, 0.0)
    with pytest.raises(np.linalg.LinAlgError, match="singular"):
        condition(model, [ConditioningConstraint(0, 0, "dc", 0.1),
                          ConditioningConstraint(0, 1, "amp", 1.0)])


def test_conditioned_samples_are_clamped(rng):
    model = random_model(rng, D=3, K=12, lam=1e-6)
    out = condition(model, [ConditioningConstraint(2, 10, "amp", 5.0)])
    i = model.index_map.index(2, 10, "amp")
    x = sample_model(out, 1, size=50)
    assert np.all(x[:, i] == np.log(5.0))


# persistence ---------------------------------------------------------------

def test_model_round_trip(tmp_path, small_dataset):
    model = condition(fit_model(small_dataset, 5),
                      [ConditioningConstraint(1, 3, "amp", 0.25)])
    save_model(model, tmp_path / "m.json")
    back = load_model(tmp_path / "m.json")
    for name in ("mu", "sigma", "phase_ref"):
        assert np.array_equal(getattr(back, name), getattr(model, name))
    assert (back.D, back.K, back.ref_duration, back.lam) == \
        (model.D, model.K, model.ref_duration, model.lam)
    data = json.loads((tmp_path / "m.json").read_text())
    assert data["index_layout"] == "dc,lnr[1..K],theta[1..K] per dof"
    assert len(data["sigma"]) == model.dim ** 2


def _tamper(tmp_path, model, **changes):
    save_model(model, tmp_path / "m.json")
    data = json.loads((tmp_path / "m.json").read_text())
    data.update(changes)
    (tmp_path / "bad.json").write_text(json.dumps(data))
    return tmp_path / "bad.json"


def test_model_file_validation(tmp_path, rng):
    model = random_model(rng)
    bad = _tamper(tmp_path, model, sigma=[0.0] * 35)
    with pytest.raises(ModelFormatError, match="sigma has 35 entries, expected 36"):
        load_model(bad)
    bad = _tamper(tmp_path, model, schema_version=99)
    with pytest.raises(ModelFormatError, match="99.*expected 1"):
        load_model(bad)
