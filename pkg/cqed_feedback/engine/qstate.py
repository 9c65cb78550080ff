"""
Complex linear algebra for the two-qubit Hilbert space: operators, Bell states, a Hermitian
eigensolver and the entanglement / fidelity metrics.

Basis ordering is {|00>, |01>, |10>, |11>} with qubit 1 the LEFT tensor factor.  Single-qubit
conventions: sigma^z = diag(1, -1) and sigma^- = |0><1|, so sigma^-|1> = |0>.

NOTE: the Bell-state names used in this package are swapped relative to the common usage:

    Psi_plus / Psi_minus = (|00> +/- |11>) / sqrt(2)
    Phi_plus / Phi_minus = (|01> +/- |10>) / sqrt(2)

so the feedback target |Phi_plus> is the J_z dark state.

Matrices are plain numpy complex arrays; DensityMatrix wraps one read-only array and exposes it
through __array__, so every function here accepts either.
"""

import numpy as np

DIM = 4

HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-9
POSITIVITY_TOL = 1e-6

JACOBI_MAX_SWEEPS = 50


class DimensionMismatch(ValueError):
    pass


class InvalidOperator(KeyError):
    pass


class NonHermitianInput(ValueError):
    pass


class EigensolverNonConvergence(ArithmeticError):
    """
    The eigensolver did not converge, which for a 4x4 Hermitian matrix means the input is corrupt (NaN / Inf)
    """
    pass


class PositivityError(ValueError):
    def __init__(self, min_eigenvalue, *args):
        self.min_eigenvalue = min_eigenvalue
        super(PositivityError, self).__init__('minimum eigenvalue %.3g below tolerance' % min_eigenvalue, *args)


_SINGLE = {
    'i': np.eye(2, dtype=complex),
    'x': np.array([[0, 1], [1, 0]], dtype=complex),
    'y': np.array([[0, -1j], [1j, 0]], dtype=complex),
    'z': np.array([[1, 0], [0, -1]], dtype=complex),
    'plus': np.array([[0, 0], [1, 0]], dtype=complex),
    'minus': np.array([[0, 1], [0, 0]], dtype=complex),
}

BASIS_LABELS = ('00', '01', '10', '11')

BELL_STATES = ('Psi_plus', 'Psi_minus', 'Phi_plus', 'Phi_minus')


def as_matrix(x):
    return np.asarray(x, dtype=complex)


def dagger(a):
    return a.conj().T


def commutator(a, b):
    return a @ b - b @ a


def anticommutator(a, b):
    return a @ b + b @ a


def hermitize(a):
    return 0.5 * (a + dagger(a))


def is_hermitian(a, tol=HERMITIAN_TOL):
    a = as_matrix(a)
    return bool(np.max(np.abs(a - dagger(a))) < tol)


def kron(a, b):
    """
    Tensor product of two single-qubit operators, a acting on qubit 1 (left factor)
    :param a: 2x2
    :param b: 2x2
    :return: 4x4 complex array
    """
    a = as_matrix(a)
    b = as_matrix(b)
    if a.shape != (2, 2) or b.shape != (2, 2):
        raise DimensionMismatch('kron requires two 2x2 operators, got %s and %s' % (a.shape, b.shape))
    return np.kron(a, b)


def qubit_op(kind, which):
    """
    Single-qubit Pauli or ladder operator embedded in the two-qubit space.
    :param kind: one of 'x', 'y', 'z', 'plus', 'minus'
    :param which: 1 or 2
    :return: 4x4 complex array
    """
    if kind not in _SINGLE or kind == 'i':
        raise InvalidOperator('Unknown single-qubit operator %s' % kind)
    if which == 1:
        return kron(_SINGLE[kind], _SINGLE['i'])
    elif which == 2:
        return kron(_SINGLE['i'], _SINGLE[kind])
    raise InvalidOperator('Qubit index must be 1 or 2, got %s' % which)


def collective_op(kind, c1=None, c2=None):
    """
    Two-qubit collective operators.

     'Jz'               s1z + s2z
     'Jx'               s1x + s2x
     'Jx_bar'           s1x - s2x
     'sigma_minus_diff' s1- - s2-
     'sigma_minus_sum'  s1- + s2-
     'weighted_x'       c1 * s1x + c2 * s2x  (c1, c2 required)

    :param kind:
    :param c1: weight on qubit 1 (weighted_x only)
    :param c2: weight on qubit 2 (weighted_x only)
    :return: 4x4 complex array
    """
    if kind == 'Jz':
        return qubit_op('z', 1) + qubit_op('z', 2)
    elif kind == 'Jx':
        return qubit_op('x', 1) + qubit_op('x', 2)
    elif kind == 'Jx_bar':
        return qubit_op('x', 1) - qubit_op('x', 2)
    elif kind == 'sigma_minus_diff':
        return qubit_op('minus', 1) - qubit_op('minus', 2)
    elif kind == 'sigma_minus_sum':
        return qubit_op('minus', 1) + qubit_op('minus', 2)
    elif kind == 'weighted_x':
        if c1 is None or c2 is None:
            raise InvalidOperator('weighted_x requires both weights')
        if not (np.isfinite(c1) and np.isfinite(c2)):
            raise InvalidOperator('weighted_x weights must be finite')
        return c1 * qubit_op('x', 1) + c2 * qubit_op('x', 2)
    raise InvalidOperator('Unknown collective operator %s' % kind)


def ket(amps):
    """
    Normalized 4-component ket
    """
    v = np.array(amps, dtype=complex).reshape(-1)
    if v.shape != (DIM,):
        raise DimensionMismatch('A two-qubit ket has 4 amplitudes, got %d' % v.size)
    norm = np.linalg.norm(v)
    if norm == 0:
        raise ValueError('Zero vector cannot be normalized')
    return v / norm


def basis_ket(label):
    try:
        index = BASIS_LABELS.index(label)
    except ValueError:
        raise InvalidOperator('Unknown basis label %s' % label)
    v = np.zeros(DIM, dtype=complex)
    v[index] = 1.0
    return v


def bell_state(which):
    """
    Bell states in this package's naming (see module docstring):
    Psi_+- = (|00> +- |11>)/sqrt(2), Phi_+- = (|01> +- |10>)/sqrt(2)
    """
    if which == 'Psi_plus':
        return ket([1, 0, 0, 1])
    elif which == 'Psi_minus':
        return ket([1, 0, 0, -1])
    elif which == 'Phi_plus':
        return ket([0, 1, 1, 0])
    elif which == 'Phi_minus':
        return ket([0, 1, -1, 0])
    raise InvalidOperator('Unknown Bell state %s' % which)


def projector(psi):
    psi = np.asarray(psi, dtype=complex)
    return np.outer(psi, psi.conj())


def _jacobi_eigh(h, tol=1e-14):
    """
    Cyclic Jacobi rotations for a small complex Hermitian matrix.  Each rotation first removes the phase of the
    pivot element, then applies a real Givens rotation.
    """
    a = h.copy()
    n = a.shape[0]
    v = np.eye(n, dtype=complex)
    scale = max(1.0, np.max(np.abs(a)))
    for _ in range(JACOBI_MAX_SWEEPS):
        off = np.sqrt(np.sum(np.abs(a - np.diag(np.diag(a))) ** 2))
        if off < tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                mag = abs(apq)
                if mag < tol * scale * 1e-3:
                    continue
                phase = apq / mag
                theta = 0.5 * np.arctan2(2 * mag, a[p, p].real - a[q, q].real)
                c, s = np.cos(theta), np.sin(theta)
                u = np.eye(n, dtype=complex)
                u[p, p] = c
                u[p, q] = -s
                u[q, p] = s * phase.conjugate()
                u[q, q] = c * phase.conjugate()
                a = dagger(u) @ a @ u
                a[p, q] = a[q, p] = 0.0
                v = v @ u
    else:
        raise EigensolverNonConvergence('Jacobi iteration cap (%d sweeps) reached' % JACOBI_MAX_SWEEPS)
    w = np.real(np.diag(a))
    order = np.argsort(w)
    return w[order], v[:, order]


def hermitian_eigensystem(h, method='lapack'):
    """
    Eigen-decomposition of a Hermitian operator.

    :param h: Hermitian matrix (or DensityMatrix)
    :param method: ['lapack'] numpy.linalg.eigh, or 'jacobi' for cyclic Jacobi rotations
    :return: (w, v) -- eigenvalues ascending; v[:, i] is the unit eigenvector for w[i]
    """
    h = as_matrix(h)
    if not np.all(np.isfinite(h)):
        raise EigensolverNonConvergence('Non-finite entries in eigensolver input')
    if not is_hermitian(h):
        raise NonHermitianInput('Eigensolver input is not Hermitian')
    h = hermitize(h)
    if method == 'jacobi':
        return _jacobi_eigh(h)
    elif method == 'lapack':
        try:
            w, v = np.linalg.eigh(h)
        except np.linalg.LinAlgError as e:
            raise EigensolverNonConvergence(str(e)) from e
        return w, v
    raise ValueError('Unknown eigensolver method %s' % method)


def min_eigenvalue(rho):
    return float(np.linalg.eigvalsh(hermitize(as_matrix(rho)))[0])


def matrix_sqrt_psd(rho, positivity_tol=POSITIVITY_TOL, method='lapack'):
    """
    Hermitian PSD square root.  Small negative eigenvalues are clipped to zero; anything below -positivity_tol is an
    error.
    """
    w, v = hermitian_eigensystem(rho, method=method)
    if w[0] < -positivity_tol:
        raise PositivityError(w[0])
    w = np.clip(w, 0.0, None)
    return (v * np.sqrt(w)) @ dagger(v)


_YY = kron(_SINGLE['y'], _SINGLE['y'])


def spin_flip(rho):
    """
    Wootters spin-flipped state (s_y x s_y) rho* (s_y x s_y), rho* the entrywise conjugate in the fixed basis
    """
    return _YY @ as_matrix(rho).conj() @ _YY


def concurrence(rho, method='lapack'):
    """
    Wootters concurrence.  The square roots of the eigenvalues of rho.rho~ are obtained from the Hermitian
    similar form sqrt(rho).rho~.sqrt(rho), so two Hermitian eigensolves suffice.
    :param rho: DensityMatrix or 4x4 array
    :param method: eigensolver passed to hermitian_eigensystem
    :return: float in [0, 1]
    """
    r = as_matrix(rho)
    s = matrix_sqrt_psd(r, method=method)
    w, _ = hermitian_eigensystem(hermitize(s @ spin_flip(r) @ s), method=method)
    w = np.clip(w, 0.0, None)
    lam = np.sort(np.sqrt(w))[::-1]
    c = lam[0] - lam[1] - lam[2] - lam[3]
    return float(min(max(c, 0.0), 1.0))


def expectation(a, rho):
    return complex(np.trace(as_matrix(a) @ as_matrix(rho)))


def fidelity_to(rho, target):
    """
    <target|rho|target>, clipped to [0, 1]
    """
    t = np.asarray(target, dtype=complex)
    f = np.vdot(t, as_matrix(rho) @ t).real
    return float(min(max(f, 0.0), 1.0))


def purity(rho):
    r = as_matrix(rho)
    return float(np.trace(r @ r).real)


def local_flip(rho, which):
    """
    Single-qubit pi-pulse (sigma^x on one qubit).  Maps Phi_+- onto Psi_+- and back.
    """
    x = qubit_op('x', which)
    return x @ as_matrix(rho) @ x


class DensityMatrix(object):
    """
    Immutable two-qubit density matrix.  Construction validates Hermiticity, unit trace and positivity; the stored
    matrix is the hermitized copy.
    """
    @classmethod
    def from_ket(cls, psi):
        return cls(projector(ket(psi)))

    @classmethod
    def maximally_mixed(cls):
        return cls(np.eye(DIM, dtype=complex) / DIM)

    @classmethod
    def separable(cls):
        """
        (|0>+|1>)_1 (x) (|0>+|1>)_2, normalized
        """
        return cls.from_ket([1, 1, 1, 1])

    @classmethod
    def named(cls, name):
        """
        :param name: a Bell state name, a basis label ('00', ..), 'separable', 'ground' (|00>) or 'mixed'
        """
        if name in BELL_STATES:
            return cls.from_ket(bell_state(name))
        if name in BASIS_LABELS:
            return cls.from_ket(basis_ket(name))
        if name == 'separable':
            return cls.separable()
        if name == 'ground':
            return cls.from_ket(basis_ket('00'))
        if name == 'mixed':
            return cls.maximally_mixed()
        raise InvalidOperator('Unknown named state %s' % name)

    def __init__(self, mat, positivity_tol=POSITIVITY_TOL):
        m = np.array(mat, dtype=complex)
        if m.shape != (DIM, DIM):
            raise DimensionMismatch('Density matrix must be 4x4, got %s' % (m.shape,))
        if not is_hermitian(m):
            raise NonHermitianInput('Density matrix is not Hermitian')
        m = hermitize(m)
        tr = np.trace(m).real
        if abs(tr - 1.0) > TRACE_TOL:
            raise ValueError('Density matrix trace %.12g != 1' % tr)
        lo = min_eigenvalue(m)
        if lo < -positivity_tol:
            raise PositivityError(lo)
        m.setflags(write=False)
        self._m = m

    @property
    def mat(self):
        return self._m

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self._m
        return self._m.astype(dtype)

    def __eq__(self, other):
        if not isinstance(other, DensityMatrix):
            return False
        return bool(np.array_equal(self._m, other.mat))

    def __hash__(self):
        return hash(self._m.tobytes())

    def __repr__(self):
        return 'DensityMatrix(purity=%.6f, concurrence=%.6f)' % (purity(self), concurrence(self))
