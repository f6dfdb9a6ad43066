"""Scattering-matrix feasible sets and their parameterizations.

Three ways to constrain the N x N scattering matrix Theta:

* ``diag``: Theta = diag(exp(j phi)), one phase per element.
* ``bd-exp``: Theta = exp(j W) with W real symmetric, so Theta is always
  unitary and symmetric; optimization runs on the free entries of W.
* ``bd-proj``: Theta kept as a dense complex matrix, pulled back onto the
  unitary-symmetric set after every step by symmetrizing and taking the
  polar factor.

All gradients follow the convention dJ = Re tr(G^H dTheta).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

_THETA_HEADER = "risbeam-theta v1"


def offdiag_indices(n: int) -> Tuple[np.ndarray, np.ndarray]:
    """Row/column indices of the strict upper triangle, row-major order."""
    return np.triu_indices(n, k=1)


def build_symmetric(n: int, diag: np.ndarray, offdiag: np.ndarray) -> np.ndarray:
    """Assemble a real symmetric matrix from its free entries."""
    diag = np.asarray(diag, dtype=float)
    offdiag = np.asarray(offdiag, dtype=float)
    if diag.shape != (n,) or offdiag.shape != (n * (n - 1) // 2,):
        raise ValueError("free-entry vectors do not match matrix size")
    w = np.zeros((n, n))
    rows, cols = offdiag_indices(n)
    w[rows, cols] = offdiag
    w[cols, rows] = offdiag
    w[np.diag_indices(n)] = diag
    return w


def split_symmetric(w: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Inverse of build_symmetric: (diagonal, strict upper triangle)."""
    w = np.asarray(w)
    rows, cols = offdiag_indices(w.shape[0])
    return np.diagonal(w).copy(), w[rows, cols].copy()


class ExpDifferential:
    """Eigen-factored exp(j W) with exact first-order maps both ways.

    With W = U diag(lam) U^T, the parameterization and its differential are

        Theta = U diag(exp(j lam)) U^T,
        dTheta = U (D * (U^T dW U)) U^T,
        D[l, k] = j exp(j (lam_l + lam_k) / 2) sinc((lam_l - lam_k) / 2),

    the divided-difference form of (e^{j lam_l} - e^{j lam_k}) /
    (lam_l - lam_k), exact for repeated eigenvalues via the sinc limit.
    """

    def __init__(self, w: np.ndarray):
        w = np.asarray(w, dtype=float)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise ValueError("generator must be a square matrix")
        if not np.allclose(w, w.T, atol=1e-12):
            raise ValueError("generator must be symmetric")
        lam, u = np.linalg.eigh(w)
        self.lam = lam
        self.u = u
        half_sum = 0.5 * (lam[:, None] + lam[None, :])
        half_diff = 0.5 * (lam[:, None] - lam[None, :])
        self._d = 1j * np.exp(1j * half_sum) * np.sinc(half_diff / math.pi)

    @property
    def theta(self) -> np.ndarray:
        return (self.u * np.exp(1j * self.lam)[None, :]) @ self.u.T

    def apply(self, dw: np.ndarray) -> np.ndarray:
        """First-order change of Theta for a symmetric perturbation dW."""
        inner = self.u.T @ np.asarray(dw, dtype=float) @ self.u
        return self.u @ (self._d * inner) @ self.u.T

    def pullback(self, grad_theta: np.ndarray) -> np.ndarray:
        """Map a Theta-space gradient to an unconstrained W-space gradient.

        Returns the dense real matrix g with dJ = sum_{lk} g[l, k] dW[l, k];
        symmetric parameter sharing (dW[i, j] = dW[j, i]) is the caller's
        bookkeeping, so the free off-diagonal gradient is g[i, j] + g[j, i].
        """
        inner = self.u.T @ np.asarray(grad_theta) @ self.u
        return self.u @ np.real(np.conj(self._d) * inner) @ self.u.T


def exp_parameterize(w: np.ndarray) -> np.ndarray:
    """Theta = exp(j W) for real symmetric W."""
    return ExpDifferential(w).theta


def project_unitary_symmetric(a: np.ndarray, sym_tol: float = 1e-6) -> np.ndarray:
    """Closest unitary to the symmetric part of ``a`` (Frobenius polar factor).

    The polar factor of a symmetric matrix is itself symmetric; this is
    checked rather than assumed, since a rank-deficient or badly scaled
    input can defeat the numerics.
    """
    a = np.asarray(a, dtype=complex)
    a_sym = 0.5 * (a + a.T)
    p, _, qh = np.linalg.svd(a_sym)
    theta = p @ qh
    asym = np.max(np.abs(theta - theta.T))
    if asym > sym_tol:
        raise np.linalg.LinAlgError(
            f"polar factor lost symmetry (residual {asym:.2e}); "
            "input is too close to singular"
        )
    return 0.5 * (theta + theta.T)


def diagonal_phase_gradient(grad_diag: np.ndarray, phases: np.ndarray) -> np.ndarray:
    """Phase-space gradient from the diagonal of the Theta-space gradient."""
    return np.real(np.conj(grad_diag) * 1j * np.exp(1j * np.asarray(phases)))


@dataclass(frozen=True)
class ScatterMatrix:
    """A feasible scattering matrix, stored as phases or as a dense matrix."""

    kind: str  # "phases" or "matrix"
    phases: Optional[np.ndarray] = None
    matrix: Optional[np.ndarray] = None

    @classmethod
    def from_phases(cls, phases: np.ndarray) -> "ScatterMatrix":
        phases = np.asarray(phases, dtype=float).copy()
        if phases.ndim != 1:
            raise ValueError("phases must be a vector")
        return cls(kind="phases", phases=phases)

    @classmethod
    def from_matrix(cls, matrix: np.ndarray) -> "ScatterMatrix":
        matrix = np.asarray(matrix, dtype=complex).copy()
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise ValueError("matrix must be square")
        return cls(kind="matrix", matrix=matrix)

    @property
    def n(self) -> int:
        return self.phases.shape[0] if self.kind == "phases" else self.matrix.shape[0]

    def as_operand(self) -> np.ndarray:
        """Vector of diagonal entries (phases kind) or the dense matrix."""
        if self.kind == "phases":
            return np.exp(1j * self.phases)
        return self.matrix

    def as_matrix(self) -> np.ndarray:
        if self.kind == "phases":
            return np.diag(np.exp(1j * self.phases))
        return self.matrix

    def unitarity_residual(self) -> float:
        if self.kind == "phases":
            return float(np.max(np.abs(np.abs(np.exp(1j * self.phases)) - 1.0)))
        m = self.matrix
        return float(np.max(np.abs(m.conj().T @ m - np.eye(self.n))))

    def symmetry_residual(self) -> float:
        if self.kind == "phases":
            return 0.0
        return float(np.max(np.abs(self.matrix - self.matrix.T)))

    def save(self, path) -> None:
        """Write a small self-describing text file (header + entries)."""
        with open(path, "w", encoding="ascii") as f:
            f.write(f"# {_THETA_HEADER}\n")
            f.write(f"# kind: {self.kind}\n")
            f.write(f"# n: {self.n}\n")
            # repr of a Python float is the shortest exact round-trip form
            if self.kind == "phases":
                for p in self.phases:
                    f.write(f"{float(p)!r}\n")
            else:
                for v in self.matrix.ravel():
                    f.write(f"{float(v.real)!r} {float(v.imag)!r}\n")

    @classmethod
    def load(cls, path) -> "ScatterMatrix":
        with open(path, "r", encoding="ascii") as f:
            lines = [ln.strip() for ln in f if ln.strip()]
        if not lines or lines[0] != f"# {_THETA_HEADER}":
            raise ValueError(f"{path}: not a {_THETA_HEADER} file")
        kind = lines[1].split(":", 1)[1].strip()
        n = int(lines[2].split(":", 1)[1].strip())
        body = lines[3:]
        if kind == "phases":
            if len(body) != n:
                raise ValueError(f"{path}: expected {n} phases, got {len(body)}")
            return cls.from_phases(np.array([float(x) for x in body]))
        if kind == "matrix":
            if len(body) != n * n:
                raise ValueError(f"{path}: expected {n * n} entries, got {len(body)}")
            vals = np.array(
                [complex(float(a), float(b)) for a, b in (ln.split() for ln in body)]
            )
            return cls.from_matrix(vals.reshape(n, n))
        raise ValueError(f"{path}: unknown kind {kind!r}")


def random_init(regime: str, n: int, rng: np.random.Generator):
    """Draw a feasible starting point in each regime's native coordinates.

    Returns phases (diag), a real symmetric generator (bd-exp), or a dense
    unitary symmetric matrix (bd-proj).
    """
    if regime == "diag":
        return rng.uniform(0.0, 2.0 * math.pi, size=n)
    if regime in ("bd-exp", "bd-proj"):
        a = rng.standard_normal((n, n))
        w = 0.5 * (a + a.T)
        if regime == "bd-exp":
            return w
        return exp_parameterize(w)
    raise ValueError(f"no scattering matrix to initialize for regime {regime!r}")


def random_scatter(regime: str, n: int, rng: np.random.Generator) -> ScatterMatrix:
    """Feasible random ScatterMatrix (diag or block regimes)."""
    init = random_init(regime, n, rng)
    if regime == "diag":
        return ScatterMatrix.from_phases(init)
    if regime == "bd-exp":
        return ScatterMatrix.from_matrix(exp_parameterize(init))
    return ScatterMatrix.from_matrix(init)
