"""
稠密矩阵参照实现，只用于测试

小端序：第 j 个比特对应 kron 链中从右数第 j 个因子
"""

import functools
import itertools

import numpy as np

from modules.pauli_engine import PauliSum

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
LETTERS = {"I": I2, "X": X, "Y": Y, "Z": Z}


def letters_matrix(letters):
    return functools.reduce(np.kron, [LETTERS[c] for c in reversed(letters)], np.eye(1, dtype=complex))


def pauli_to_matrix(op: PauliSum):
    dim = 2 ** op.n_q
    out = np.zeros((dim, dim), dtype=complex)
    for term in op.terms():
        out += term.coeff * letters_matrix(term.letters)
    return out


def commutator(a, b):
    return a @ b - b @ a


def hs_norm_sq(m):
    """tr(M†M)/2^n，与 Pauli 系数平方和一致"""
    return float(np.real(np.trace(m.conj().T @ m))) / m.shape[0]


def alpha1(h_i, h_f, lam):
    c = commutator(h_i, h_f)
    num = hs_norm_sq(c)
    den = (1 - lam) * hs_norm_sq(commutator(h_i, c)) + lam * hs_norm_sq(commutator(h_f, c))
    return -num / den


def expm_pauli(letters, angle):
    """exp(-i·angle·P)，P² = 1"""
    p = letters_matrix(letters)
    return np.cos(angle) * np.eye(p.shape[0]) - 1j * np.sin(angle) * p


def all_bitstrings(n_q):
    return ["".join(bits) for bits in itertools.product("01", repeat=n_q)]
