"""Independent reference implementations used only by the tests."""

import numpy as np


def dense_transmon_levels(e_c, e_j, n_g=0.0, truncation=60):
    """Independent oracle: full dense charge-basis Hamiltonian, numpy eigvalsh."""
    n = np.arange(-truncation, truncation + 1)
    dim = n.size
    h = np.diag(4 * e_c * (n - n_g) ** 2) - 0.5 * e_j * (np.eye(dim, k=1) + np.eye(dim, k=-1))
    e = np.linalg.eigvalsh(h)
    return e - e[0]


def _col_super(h, collapse):
    """Lindblad generator on column-stacked vec(rho): vec(A X B) = (B^T kron A) vec(X)."""
    d = h.shape[0]
    eye = np.eye(d)
    gen = -1j * (np.kron(eye, h) - np.kron(h.T, eye))
    for c in collapse:
        cdc = c.conj().T @ c
        gen += np.kron(c.conj(), c) - 0.5 * np.kron(eye, cdc) - 0.5 * np.kron(cdc.T, eye)
    return gen


def two_level_lindblad(rho0, t, omega=0.0, detuning=0.0, gamma1=0.0, t_phi=np.inf, phase=0.0):
    """Pauli-form two-level master equation, integrated with a matrix exponential.

    Basis (|0>, |1>).  ``detuning`` is 2 pi (f01 - f_drive) in rad/s.
    """
    from scipy.linalg import expm

    sz = np.diag([1.0, -1.0]).astype(complex)
    sm = np.array([[0, 1], [0, 0]], dtype=complex)
    sx = np.array([[0, 1], [1, 0]], dtype=complex)
    sy = np.array([[0, -1j], [1j, 0]], dtype=complex)
    h = -0.5 * detuning * sz + 0.5 * omega * (np.cos(phase) * sx + np.sin(phase) * sy)
    ops = []
    if gamma1:
        ops.append(np.sqrt(gamma1) * sm)
    if np.isfinite(t_phi):
        ops.append(np.sqrt(1 / (2 * t_phi)) * sz)
    gen = _col_super(h, ops)
    vec = expm(gen * t) @ np.asarray(rho0, dtype=complex).reshape(-1, order="F")
    return vec.reshape(2, 2, order="F")


def detuned_rabi(t, omega, detuning):
    w = np.hypot(omega, detuning)
    return (omega / w) ** 2 * np.sin(w * np.asarray(t) / 2) ** 2
