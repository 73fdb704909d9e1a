"""Truncated Fock-space operators and states.

Matrices are stored sparse (CSR); ``dense()`` gives the full array.  On a mode
truncated at ``d`` levels the commutator [a, a^dag] equals the identity
everywhere except the top level, where it is ``1 - d``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import reduce
from typing import Sequence

import numpy as np
import scipy.sparse as sp


@dataclass(frozen=True)
class FockOperator:
    dims: tuple[int, ...]
    matrix: sp.csr_matrix
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        m = sp.csr_matrix(self.matrix, dtype=complex)
        size = int(np.prod(self.dims))
        if m.shape != (size, size):
            raise ValueError(f"matrix shape {m.shape} does not match dims {self.dims}")
        object.__setattr__(self, "matrix", m)

    @property
    def size(self) -> int:
        return int(np.prod(self.dims))

    def dag(self) -> "FockOperator":
        return FockOperator(self.dims, self.matrix.conj().T.tocsr(), f"({self.label})^dag")

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()

    def _check(self, other: "FockOperator"):
        if self.dims != other.dims:
            raise ValueError(f"dimension mismatch {self.dims} vs {other.dims}")

    def __add__(self, other):
        if isinstance(other, FockOperator):
            self._check(other)
            return FockOperator(self.dims, self.matrix + other.matrix, f"{self.label}+{other.label}")
        return self + other * identity(self.dims)

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-1.0) * other

    def __rsub__(self, other):
        return (-1.0) * self + other

    def __neg__(self):
        return (-1.0) * self

    def __mul__(self, other):
        if isinstance(other, FockOperator):
            return self @ other
        return FockOperator(self.dims, self.matrix * complex(other), self.label)

    __rmul__ = __mul__

    def __matmul__(self, other: "FockOperator") -> "FockOperator":
        self._check(other)
        return FockOperator(self.dims, (self.matrix @ other.matrix).tocsr(), f"{self.label}{other.label}")

    def __pow__(self, k: int) -> "FockOperator":
        return reduce(lambda a, b: a @ b, [self] * k) if k > 0 else identity(self.dims)

    def norm_bound(self) -> float:
        """Upper bound on the spectral norm: sqrt(||A||_1 ||A||_inf)."""
        a = abs(self.matrix)
        n1 = a.sum(axis=0).max() if a.nnz else 0.0
        ninf = a.sum(axis=1).max() if a.nnz else 0.0
        return float(math.sqrt(n1 * ninf))


def _single(d: int, kind: str) -> sp.csr_matrix:
    k = np.arange(1, d)
    if kind == "a":
        return sp.diags(np.sqrt(k), 1, shape=(d, d), format="csr", dtype=complex)
    if kind == "n":
        return sp.diags(np.arange(d, dtype=float), 0, shape=(d, d), format="csr", dtype=complex)
    raise ValueError(kind)


def _embed(dims: Sequence[int], mode: int, m: sp.spmatrix) -> sp.csr_matrix:
    mats = [m if i == mode else sp.identity(d, dtype=complex, format="csr") for i, d in enumerate(dims)]
    return reduce(lambda x, y: sp.kron(x, y, format="csr"), mats)


def destroy(dims: Sequence[int] | int, mode: int = 0) -> FockOperator:
    dims = (dims,) if isinstance(dims, int) else tuple(dims)
    return FockOperator(dims, _embed(dims, mode, _single(dims[mode], "a")), f"a{mode + 1}")


def create(dims: Sequence[int] | int, mode: int = 0) -> FockOperator:
    return destroy(dims, mode).dag()


def number(dims: Sequence[int] | int, mode: int = 0) -> FockOperator:
    dims = (dims,) if isinstance(dims, int) else tuple(dims)
    return FockOperator(dims, _embed(dims, mode, _single(dims[mode], "n")), f"n{mode + 1}")


def identity(dims: Sequence[int] | int) -> FockOperator:
    dims = (dims,) if isinstance(dims, int) else tuple(dims)
    return FockOperator(dims, sp.identity(int(np.prod(dims)), dtype=complex, format="csr"), "I")


# --------------------------------------------------------------------------
# states

def fock_state(d: int, n: int) -> np.ndarray:
    v = np.zeros(d, dtype=complex)
    v[n] = 1.0
    return v


def coherent_state(d: int, alpha: complex) -> np.ndarray:
    """Truncated coherent state, renormalized after truncation."""
    n = np.arange(d)
    log_fact = np.array([math.lgamma(k + 1) for k in n])
    if alpha == 0:
        return fock_state(d, 0)
    amp = np.exp(n * np.log(complex(alpha)) - 0.5 * log_fact)
    v = amp * math.exp(-abs(alpha) ** 2 / 2)
    return v / np.linalg.norm(v)


def cat_state(d: int, alpha: complex, parity: int = 1) -> np.ndarray:
    """Normalized (|alpha> + parity |-alpha>)."""
    v = coherent_state(d, alpha) + parity * coherent_state(d, -alpha)
    nrm = np.linalg.norm(v)
    if nrm < 1e-14:
        raise ValueError("cat state vanishes for this amplitude and parity")
    return v / nrm


def cat_basis(d: int, alpha: complex) -> tuple[np.ndarray, np.ndarray]:
    """Computational states (C+ + C-)/sqrt2 and (C+ - C-)/sqrt2, close to |+-alpha>."""
    cp, cm = cat_state(d, alpha, 1), cat_state(d, alpha, -1)
    return (cp + cm) / math.sqrt(2), (cp - cm) / math.sqrt(2)


def tensor(*vecs: np.ndarray) -> np.ndarray:
    return reduce(np.kron, vecs)


def dm(psi: np.ndarray) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex).reshape(-1)
    return np.outer(psi, psi.conj())


def expect(op: FockOperator, state: np.ndarray) -> complex:
    """Expectation value for a ket (1-D) or density matrix (2-D)."""
    if state.ndim == 1:
        return complex(np.vdot(state, op.matrix @ state))
    return complex(np.trace(op.matrix @ state))


def state_fidelity(rho: np.ndarray, sigma: np.ndarray) -> float:
    """(Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2; kets are accepted for either side."""
    if rho.ndim == 1 and sigma.ndim == 1:
        return float(abs(np.vdot(rho, sigma)) ** 2)
    if sigma.ndim == 1:
        rho, sigma = sigma, rho
    if rho.ndim == 1:
        return float(np.real(np.vdot(rho, sigma @ rho)))
    s = _psd_sqrt(rho)
    m = s @ sigma @ s
    ev = np.linalg.eigvalsh(0.5 * (m + m.conj().T))
    ev = np.where(ev > 1e-13 * max(ev.max(), 0.0), ev, 0.0)
    return float(np.sum(np.sqrt(ev)) ** 2)


def _psd_sqrt(m: np.ndarray) -> np.ndarray:
    # Hermitian square root; sqrtm loses accuracy on the rank-deficient states common here
    w, v = np.linalg.eigh(0.5 * (m + m.conj().T))
    w = np.where(w > 1e-13 * max(w.max(), 0.0), w, 0.0)
    return (v * np.sqrt(w)) @ v.conj().T


def partial_trace(rho: np.ndarray, dims: Sequence[int], keep: int) -> np.ndarray:
    dims = list(dims)
    r = rho.reshape(dims + dims)
    n = len(dims)
    axes = [i for i in range(n) if i != keep]
    for k, ax in enumerate(sorted(axes, reverse=True)):
        r = np.trace(r, axis1=ax, axis2=ax + r.ndim // 2)
    return r
