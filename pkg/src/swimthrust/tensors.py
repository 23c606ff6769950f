"""Vector and second-order tensor algebra on batched numpy arrays.

Vectors are arrays of shape ``(..., 3)`` and tensors arrays of shape
``(..., 3, 3)``; every operation broadcasts over the leading batch axes.

Index conventions
-----------------
A tensor ``A`` is stored so that ``A[..., i, k]`` is the coefficient of
``e_i (x) e_k``. Products and contractions follow::

    (A . B)_ij = A_il B_lj          matmul
    A : B      = A_il B_il          ddot  (= trace(A . B^T))
    (A . a)_i  = A_ik a_k           mat_vec
    a . A      = A^T . a            vec_mat

The gradient of a vector field is taken with the *derivative index first*::

    (grad v)_ij = d v_j / d x_i

Worked example: for ``v(x) = (x_2, 0, 0)`` the only non-zero derivative is
``d v_1 / d x_2 = 1``, so ``grad v = e_2 (x) e_1`` and ``grad v[1, 0] == 1``.
With this convention ``div v = trace(grad v)`` and the convective term
``(w . grad) v`` is ``vec_mat(w, grad v)``.
"""

from __future__ import annotations

import numpy as np

IDENTITY = np.eye(3)
BASIS = np.eye(3)


def as_vec(a) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.shape[-1:] != (3,):
        raise ValueError(f"expected trailing dimension 3, got shape {a.shape}")
    return a


def as_mat(A) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.shape[-2:] != (3, 3):
        raise ValueError(f"expected trailing shape (3, 3), got shape {A.shape}")
    return A


def dyad(a, b) -> np.ndarray:
    """Dyadic product ``a (x) b`` with components ``a_i b_k``."""
    return np.einsum("...i,...k->...ik", as_vec(a), as_vec(b))


def transpose(A) -> np.ndarray:
    return np.swapaxes(as_mat(A), -1, -2)


def ddot(A, B) -> np.ndarray:
    """Double contraction ``A : B = A_il B_il``."""
    A, B = as_mat(A), as_mat(B)
    return (A * B).sum(axis=(-2, -1))


def matmul(A, B) -> np.ndarray:
    """``(A . B)_ij = A_il B_lj``."""
    return np.matmul(as_mat(A), as_mat(B))


def mat_vec(A, a) -> np.ndarray:
    return np.einsum("...ik,...k->...i", as_mat(A), as_vec(a))


def vec_mat(a, A) -> np.ndarray:
    """``a . A``, i.e. ``A^T . a`` with components ``a_k A_ki``."""
    return np.einsum("...k,...ki->...i", as_vec(a), as_mat(A))


def dot(a, b) -> np.ndarray:
    return np.einsum("...i,...i->...", as_vec(a), as_vec(b))


def sym(A) -> np.ndarray:
    """Symmetric part ``(A + A^T) / 2``; applied to a Jacobian it is the rate of strain."""
    A = as_mat(A)
    return 0.5 * (A + transpose(A))


def skew(A) -> np.ndarray:
    A = as_mat(A)
    return 0.5 * (A - transpose(A))


def trace(A) -> np.ndarray:
    return np.einsum("...ii->...", as_mat(A))
