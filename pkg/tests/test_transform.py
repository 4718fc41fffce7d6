import numpy as np
import numpy.testing as npt
import pytest

from erm_ica.middleware.errors import TransformError
from erm_ica.models.transform import LinearTransform
from erm_ica.schemas.artifacts import TransformKind
from erm_ica.schemas.experiment import IcaContrast
from erm_ica.services.metrics import mcc
from erm_ica.services.numerics import RngStream, empirical_covariance, rng_normal, sym_inv_sqrt
from erm_ica.services.transform import (
    apply_transform,
    fit_ica,
    fit_pca,
    fit_whiten,
    load_transform,
    save_transform,
)


def exactly_white(rng, n, d):
    """경험 공분산이 정확히 I, 평균 0인 표본."""
    X = rng_normal(rng, n, d)
    X = X - X.mean(axis=0)
    return X @ sym_inv_sqrt(empirical_covariance(X))


def uniform_sources(rng, n, d):
    return (rng.uniform(n, d) - 0.5) * np.sqrt(12.0)


def test_whiten_already_white():
    R = exactly_white(RngStream(0), 500, 3)
    out = apply_transform(fit_whiten(R), R)
    npt.assert_allclose(empirical_covariance(out), np.eye(3), atol=1e-6)


def test_whiten_diag_4_1():
    R = exactly_white(RngStream(1), 1000, 2) @ np.diag([2.0, 1.0]) + np.array([5.0, -3.0])
    t = fit_whiten(R)
    npt.assert_allclose(np.abs(t.matrix), np.diag([0.5, 1.0]), atol=1e-8)
    npt.assert_allclose(t.offset, [5.0, -3.0], atol=1e-10)
    npt.assert_allclose(empirical_covariance(apply_transform(t, R)), np.eye(2), atol=1e-6)


def test_whiten_rank_deficient_drops_direction():
    R = rng_normal(RngStream(2), 300, 3)
    R = np.hstack([R, R[:, :1]])
    t = fit_whiten(R)
    assert t.matrix.shape == (3, 4)
    npt.assert_allclose(empirical_covariance(apply_transform(t, R)), np.eye(3), atol=1e-6)


def test_whiten_errors():
    with pytest.raises(TransformError):
        fit_whiten(np.ones((3, 3)))
    with pytest.raises(TransformError):
        fit_whiten(np.ones((10, 2)))


def test_pca_diag_and_trace():
    R = exactly_white(RngStream(3), 1000, 2) @ np.array([[2.0, 0.0], [0.0, 1.0]]) @ np.array(
        [[np.cos(0.3), np.sin(0.3)], [-np.sin(0.3), np.cos(0.3)]]
    )
    t = fit_pca(R)
    out = apply_transform(t, R)
    npt.assert_allclose(empirical_covariance(out), np.diag([4.0, 1.0]), atol=1e-6)
    npt.assert_allclose(np.trace(empirical_covariance(out)), np.trace(empirical_covariance(R)), atol=1e-8)


def test_pca_idempotent_up_to_sign():
    R = rng_normal(RngStream(4), 800, 3) @ np.array([[3.0, 0.2, 0.0], [0.0, 1.0, 0.4], [0.0, 0.0, 0.5]])
    out = apply_transform(fit_pca(R), R)
    again = fit_pca(out)
    npt.assert_allclose(np.abs(again.matrix), np.eye(3), atol=1e-6)


def test_pca_isotropic_keeps_spectrum():
    R = exactly_white(RngStream(5), 400, 3)
    out = apply_transform(fit_pca(R), R)
    npt.assert_allclose(np.linalg.eigvalsh(empirical_covariance(out)), np.ones(3), atol=1e-6)


@pytest.mark.parametrize("seed", range(20))
def test_ica_rotated_uniform_sources(seed):
    rng = RngStream(seed)
    S = uniform_sources(rng, 5000, 2)
    theta = np.pi / 6
    A = np.array([[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]])
    t = fit_ica(S @ A.T, rng=rng.child("ica"))
    assert mcc(S, apply_transform(t, S @ A.T)) >= 0.95


def test_ica_self_recovery_and_composition():
    rng = RngStream(30)
    S = uniform_sources(rng, 4000, 4)
    t = fit_ica(S, rng=rng.child("ica"))
    out = apply_transform(t, S)
    assert t.converged is True
    assert t.kind == TransformKind.ica
    assert mcc(S, out) >= 0.99
    npt.assert_allclose(t.unmixing @ t.unmixing.T, np.eye(4), atol=1e-6)
    npt.assert_allclose(out, apply_transform(t.whitener, S) @ t.unmixing.T, atol=1e-10)


@pytest.mark.parametrize("fun", [IcaContrast.exp, IcaContrast.cube])
def test_ica_alternative_contrasts(fun):
    rng = RngStream(31)
    S = uniform_sources(rng, 4000, 3)
    M = rng_normal(rng, 3, 3) + 2 * np.eye(3)
    t = fit_ica(S @ M.T, rng=rng.child("ica"), fun=fun)
    assert mcc(S, apply_transform(t, S @ M.T)) >= 0.95


def test_ica_permutation_equivariance():
    rng = RngStream(32)
    S = uniform_sources(rng, 4000, 3)
    X = S @ (rng_normal(rng, 3, 3) + 2 * np.eye(3)).T
    perm = [2, 0, 1]
    a = apply_transform(fit_ica(X, rng=RngStream(1)), X)
    b = apply_transform(fit_ica(X[:, perm], rng=RngStream(1)), X[:, perm])
    assert mcc(a, b) >= 0.99


def test_ica_gaussian_input_stays_finite():
    R = rng_normal(RngStream(33), 2000, 3)
    t = fit_ica(R, max_iter=25, tol=1e-12, rng=RngStream(0))
    assert t.converged is False
    assert t.iterations == 25
    assert np.all(np.isfinite(t.matrix))
    npt.assert_allclose(t.unmixing @ t.unmixing.T, np.eye(3), atol=1e-6)


def test_apply_transform_identity_and_shape_check():
    t = LinearTransform(matrix=np.eye(3), offset=np.zeros(3), kind=TransformKind.pca)
    R = rng_normal(RngStream(0), 5, 3)
    npt.assert_array_equal(apply_transform(t, R), R)
    with pytest.raises(TransformError):
        apply_transform(t, np.ones((5, 2)))


def test_transform_file_round_trip(tmp_path):
    R = uniform_sources(RngStream(34), 1000, 3)
    t = fit_ica(R, rng=RngStream(0))
    save_transform(t, tmp_path / "transform.json")
    loaded = load_transform(tmp_path / "transform.json")
    assert (loaded.kind, loaded.converged, loaded.iterations) == (t.kind, t.converged, t.iterations)
    npt.assert_array_equal(apply_transform(loaded, R), apply_transform(t, R))
