"""Eigenstructure of the spatial operator and Hilbert-scale algebra.

The concrete operator is the 1-D Dirichlet Laplacian on (0, l), whose
closed-form eigenpairs make every downstream number independently checkable.
Custom bases may be supplied as explicit eigenvalue tables with an
eigenfunction evaluator. All reported norms are truncated-scale norms.
"""

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import OutOfDomain


def simpson_weights(n_nodes, h):
    """Composite Simpson weights for an odd number of uniform nodes."""
    if n_nodes < 3 or n_nodes % 2 == 0:
        raise ValueError("Simpson rule needs an odd node count >= 3")
    w = np.ones(n_nodes)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return w * (h / 3.0)


@dataclass
class SpectralBasis:
    """Truncated orthonormal eigenbasis of a positive operator on (0, l)."""

    l: float
    J: int
    eigenvalues: np.ndarray
    efunc: Callable[[int, np.ndarray], np.ndarray]  # efunc(j, x), j is 1-based
    Q: int
    kind: str = "custom"
    ortho_tol: float = 1e-6
    quad_nodes: np.ndarray = field(init=False, repr=False)
    quad_weights: np.ndarray = field(init=False, repr=False)
    _eval_quad: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if not self.l > 0.0:
            raise ValueError("domain length must be positive")
        if self.J < 1:
            raise ValueError("truncation J must be at least 1")
        if self.Q < 4 * self.J:
            raise ValueError(f"need Q >= 4*J quadrature nodes, got Q={self.Q}")
        self.eigenvalues = np.asarray(self.eigenvalues, dtype=np.float64)
        if self.eigenvalues.shape != (self.J,):
            raise ValueError("eigenvalue table must have length J")
        if not np.all(self.eigenvalues > 0.0):
            raise ValueError("eigenvalues must be positive")
        if np.any(np.diff(self.eigenvalues) < 0.0):
            raise ValueError("eigenvalues must be ascending")
        n_nodes = self.Q if self.Q % 2 == 1 else self.Q + 1
        self.quad_nodes = np.linspace(0.0, self.l, n_nodes)
        self.quad_weights = simpson_weights(n_nodes, self.l / (n_nodes - 1))
        self._eval_quad = self.eval_matrix(self.quad_nodes)
        gram = (self._eval_quad * self.quad_weights[:, None]).T @ self._eval_quad
        defect = np.max(np.abs(gram - np.eye(self.J)))
        if defect > self.ortho_tol:
            raise ValueError(
                f"basis is not orthonormal under its quadrature (defect {defect:.2e})"
            )

    def eval_matrix(self, x):
        """Eigenfunction values e_j(x_i) as an (len(x), J) matrix."""
        x = np.asarray(x, dtype=np.float64)
        out = np.empty((x.size, self.J))
        for j in range(1, self.J + 1):
            out[:, j - 1] = self.efunc(j, x)
        return out


def dirichlet_laplacian_basis(l, J, Q=None):
    """Sine eigenbasis of the Dirichlet Laplacian on (0, l).

    lambda_j = (j pi / l)^2 and e_j(x) = sqrt(2/l) sin(j pi x / l); the
    default quadrature resolution is Q = max(256, 8 J).
    """
    if Q is None:
        Q = max(256, 8 * J)
    lam = (np.arange(1, J + 1) * np.pi / l) ** 2
    amp = np.sqrt(2.0 / l)

    def efunc(j, x):
        return amp * np.sin(j * np.pi * np.asarray(x) / l)

    return SpectralBasis(l=l, J=J, eigenvalues=lam, efunc=efunc, Q=Q,
                         kind="dirichlet_laplacian_1d")


def project(f, basis):
    """Modal coefficients v_j = integral of f * e_j by composite Simpson."""
    fx = np.asarray(f(basis.quad_nodes), dtype=np.float64)
    if fx.shape != basis.quad_nodes.shape:
        fx = np.broadcast_to(fx, basis.quad_nodes.shape).astype(np.float64)
    return (basis._eval_quad * basis.quad_weights[:, None]).T @ fx


def fractional_power_apply(v, basis, gamma):
    """Mode-wise multiplication by lambda_j^gamma (negative gamma allowed)."""
    v = np.asarray(v, dtype=np.float64)
    return v * basis.eigenvalues**gamma


def scale_norm(v, basis, gamma):
    """Truncated Hilbert-scale norm (sum v_j^2 lambda_j^(2 gamma))^(1/2).

    gamma = 0 is the L2(Omega) norm by Parseval; gamma < 0 gives the dual
    scale norm.
    """
    v = np.asarray(v, dtype=np.float64)
    return float(np.sqrt(np.sum(v**2 * basis.eigenvalues ** (2.0 * gamma))))


def synthesize(v, basis, x):
    """Pointwise value sum_j v_j e_j(x) for x inside (0, l)."""
    x_arr = np.atleast_1d(np.asarray(x, dtype=np.float64))
    if np.any(x_arr <= 0.0) or np.any(x_arr >= basis.l):
        raise OutOfDomain(f"x must lie in (0, {basis.l})")
    v = np.asarray(v, dtype=np.float64)
    vals = basis.eval_matrix(x_arr) @ v
    return vals if np.ndim(x) else float(vals[0])
