import numpy as np
import pytest
from scipy.linalg import expm

from risbeam.scatter import (
    ExpDifferential,
    ScatterMatrix,
    build_symmetric,
    diagonal_phase_gradient,
    exp_parameterize,
    offdiag_indices,
    project_unitary_symmetric,
    random_init,
    random_scatter,
    split_symmetric,
)


def _random_symmetric(rng, n):
    w = rng.standard_normal((n, n))
    return 0.5 * (w + w.T)


def test_build_split_roundtrip():
    rng = np.random.default_rng(0)
    for n in (1, 2, 5, 9):
        w = _random_symmetric(rng, n)
        d, o = split_symmetric(w)
        assert np.array_equal(build_symmetric(n, d, o), w)
    with pytest.raises(ValueError):
        build_symmetric(3, np.zeros(2), np.zeros(3))


def test_offdiag_indices_order():
    rows, cols = offdiag_indices(3)
    assert list(zip(rows.tolist(), cols.tolist())) == [(0, 1), (0, 2), (1, 2)]


def test_exp_parameterize_matches_expm():
    rng = np.random.default_rng(1)
    for n in (1, 2, 4, 8, 16):
        w = _random_symmetric(rng, n)
        assert np.allclose(exp_parameterize(w), expm(1j * w), atol=1e-12)


def test_exp_parameterize_always_feasible():
    rng = np.random.default_rng(2)
    for trial in range(100):
        n = int(rng.integers(1, 17))
        theta = exp_parameterize(_random_symmetric(rng, n) * rng.uniform(0.1, 10))
        assert np.linalg.norm(theta.conj().T @ theta - np.eye(n)) <= 1e-10 * n
        assert np.linalg.norm(theta - theta.T) <= 1e-10 * n


def test_exp_differential_matches_fd():
    rng = np.random.default_rng(3)
    h = 1e-6
    for _ in range(10):
        n = int(rng.integers(2, 9))
        w = _random_symmetric(rng, n)
        diff = ExpDifferential(w)
        dw = _random_symmetric(rng, n)
        fd = (expm(1j * (w + h * dw)) - expm(1j * (w - h * dw))) / (2 * h)
        got = diff.apply(dw)
        assert np.linalg.norm(got - fd) / np.linalg.norm(fd) < 1e-6


def test_exp_differential_repeated_eigenvalues():
    # W = c I has a totally degenerate spectrum; the divided-difference
    # kernel must fall back to its sinc limit, d Theta = j e^{jc} dW.
    c = 0.8
    w = c * np.eye(6)
    diff = ExpDifferential(w)
    rng = np.random.default_rng(4)
    dw = _random_symmetric(rng, 6)
    want = 1j * np.exp(1j * c) * dw
    assert np.allclose(diff.apply(dw), want, atol=1e-12)
    # and block-repeated spectra via finite differences
    w2 = build_symmetric(4, np.array([1.0, 1.0, 2.0, 2.0]), np.zeros(6))
    diff2 = ExpDifferential(w2)
    dw2 = _random_symmetric(rng, 4)
    h = 1e-6
    fd = (expm(1j * (w2 + h * dw2)) - expm(1j * (w2 - h * dw2))) / (2 * h)
    assert np.linalg.norm(diff2.apply(dw2) - fd) / np.linalg.norm(fd) < 1e-6


def test_exp_pullback_adjoint_identity():
    # pullback is the adjoint of apply under the pairing Re tr(G^H X):
    # Re tr(G^H apply(dW)) == sum(pullback(G) * dW) for all symmetric dW.
    rng = np.random.default_rng(5)
    for _ in range(10):
        n = int(rng.integers(2, 9))
        diff = ExpDifferential(_random_symmetric(rng, n))
        g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        dw = _random_symmetric(rng, n)
        lhs = float(np.real(np.trace(g.conj().T @ diff.apply(dw))))
        rhs = float(np.sum(diff.pullback(g) * dw))
        assert lhs == pytest.approx(rhs, rel=1e-10, abs=1e-12)


def test_exp_differential_rejects_asymmetric():
    with pytest.raises(ValueError):
        ExpDifferential(np.array([[0.0, 1.0], [0.5, 0.0]]))


def test_projection_properties():
    rng = np.random.default_rng(6)
    for trial in range(100):
        n = int(rng.integers(2, 17))
        a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        theta = project_unitary_symmetric(a)
        assert np.linalg.norm(theta.conj().T @ theta - np.eye(n)) <= 1e-10 * n
        assert np.linalg.norm(theta - theta.T) <= 1e-10 * n
        # idempotent
        assert np.allclose(project_unitary_symmetric(theta), theta, atol=1e-10)


def test_projection_is_closest_unitary():
    # For symmetric input the polar factor minimizes ||A - U||_F over
    # unitaries; verify against a dense search over random unitaries.
    rng = np.random.default_rng(7)
    a = _random_symmetric(rng, 4) + 1j * _random_symmetric(rng, 4)
    theta = project_unitary_symmetric(a)
    best = np.linalg.norm(a - theta)
    for _ in range(200):
        z = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        q, _ = np.linalg.qr(z)
        assert np.linalg.norm(a - q) >= best - 1e-9


def test_projection_fixes_feasible_points():
    rng = np.random.default_rng(8)
    w = _random_symmetric(rng, 5)
    theta = exp_parameterize(w)
    assert np.allclose(project_unitary_symmetric(theta), theta, atol=1e-12)


def test_diagonal_phase_gradient_chain_rule():
    # d/dphi J(diag(e^{j phi})) where dJ = Re tr(G^H dTheta)
    rng = np.random.default_rng(9)
    n = 6
    phases = rng.uniform(0, 2 * np.pi, n)
    g = rng.standard_normal(n) + 1j * rng.standard_normal(n)

    def j(phi):
        return float(np.real(np.vdot(g, np.exp(1j * phi))))

    grad = diagonal_phase_gradient(g, phases)
    h = 1e-7
    for i in range(n):
        e = np.zeros(n)
        e[i] = 1.0
        fd = (j(phases + h * e) - j(phases - h * e)) / (2 * h)
        assert grad[i] == pytest.approx(fd, rel=1e-6, abs=1e-10)


def test_scatter_matrix_round_trips(tmp_path):
    rng = np.random.default_rng(10)
    for regime in ("diag", "bd-exp", "bd-proj"):
        s = random_scatter(regime, 7, rng)
        path = tmp_path / (regime + ".txt")
        s.save(str(path))
        t = ScatterMatrix.load(str(path))
        assert t.kind == s.kind
        assert np.array_equal(t.as_matrix(), s.as_matrix())
        if s.kind == "phases":
            assert np.array_equal(t.phases, s.phases)


def test_scatter_matrix_operand_and_residuals():
    phases = np.array([0.0, np.pi / 2, np.pi])
    s = ScatterMatrix.from_phases(phases)
    assert s.n == 3
    assert np.allclose(s.as_matrix(), np.diag(np.exp(1j * phases)))
    assert s.unitarity_residual() <= 1e-12
    assert s.symmetry_residual() == 0.0
    m = ScatterMatrix.from_matrix(np.eye(3, dtype=complex))
    assert m.unitarity_residual() <= 1e-15


def test_scatter_matrix_validation():
    with pytest.raises(ValueError):
        ScatterMatrix.from_phases(np.zeros((2, 2)))


def test_scatter_load_rejects_corrupt(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("# not-a-theta\n")
    with pytest.raises(ValueError):
        ScatterMatrix.load(str(path))
    path.write_text("# risbeam-theta v1\n# kind: phases\n# n: 3\n0.0\n0.1\n")
    with pytest.raises(ValueError, match="expected 3"):
        ScatterMatrix.load(str(path))


def test_random_init_feasibility():
    rng = np.random.default_rng(11)
    for trial in range(100):
        n = int(rng.integers(1, 17))
        phases = random_init("diag", n, rng)
        assert phases.shape == (n,)
        w = random_init("bd-exp", n, rng)
        assert np.array_equal(w, w.T)
        theta = random_init("bd-proj", n, rng)
        assert np.linalg.norm(theta.conj().T @ theta - np.eye(n)) <= 1e-10 * n
        assert np.linalg.norm(theta - theta.T) <= 1e-10 * n
    with pytest.raises(ValueError):
        random_init("none", 4, rng)


def test_random_scatter_regime_invariants():
    rng = np.random.default_rng(12)
    for trial in range(100):
        n = int(rng.integers(1, 17))
        for regime in ("diag", "bd-exp", "bd-proj"):
            s = random_scatter(regime, n, rng)
            assert s.unitarity_residual() <= 1e-10 * n
            assert s.symmetry_residual() <= 1e-10 * n
