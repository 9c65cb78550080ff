"""
Dispersive two-qubit model: physical parameters, derived rates, and the drift / diffusion superoperators of the
conditional master equation and of its Markovian-feedback extension.

Conditional master equation (Ito):

    d rho = { -i chi|alpha|^2 [J_z, rho] + sum_j gamma_j D[s_j^-] rho + sum_j (gamma_phi_j / 2) D[s_j^z] rho
              + gamma_p D[s_1^- -/+ s_2^-] rho + (Gamma_d / 2) D[J_z] rho } dt
            + (sqrt(Gamma_m) / 2) H[J_z] rho dW

The qubit-qubit exchange term of the dispersive Hamiltonian is not part of this equation and is not re-added.
Rates built by the scenario presets or by ModelRates.from_physical(normalize=True) are in units of Gamma_d and
times in units of 1/Gamma_d.
"""

import logging
import warnings
from collections import namedtuple
from dataclasses import dataclass, replace

import numpy as np

from .qstate import (as_matrix, dagger, commutator, anticommutator, collective_op, qubit_op, is_hermitian,
                     NonHermitianInput, DIM)

logger = logging.getLogger(__name__)

DISPERSIVE_LIMIT = 0.1

PURCELL_SIGNS = ('minus', 'plus')


class InvalidParameters(ValueError):
    pass


class DispersiveWarning(UserWarning):
    pass


JZ = collective_op('Jz')
SIGMA_MINUS = (qubit_op('minus', 1), qubit_op('minus', 2))
SIGMA_Z = (qubit_op('z', 1), qubit_op('z', 2))
PURCELL_OPS = {'minus': collective_op('sigma_minus_diff'),
               'plus': collective_op('sigma_minus_sum')}


@dataclass(frozen=True)
class PhysicalParams:
    """
    Circuit-QED parameters.  g_1 = -g_2 = g and the drive is resonant with the cavity (Delta_r = 0).

    :param g: qubit-cavity coupling
    :param delta: qubit-cavity detuning omega_r - Omega
    :param epsilon: measurement drive amplitude
    :param kappa: cavity leakage rate
    :param eta: homodyne efficiency, 0 < eta <= 1
    """
    g: float
    delta: float
    epsilon: float
    kappa: float
    eta: float = 1.0

    def __post_init__(self):
        if self.delta == 0:
            raise InvalidParameters('Detuning delta must be nonzero')
        if not self.kappa > 0:
            raise InvalidParameters('Cavity leakage kappa must be positive')
        if not 0 < self.eta <= 1:
            raise InvalidParameters('Efficiency eta must lie in (0, 1], got %g' % self.eta)
        if abs(self.g / self.delta) > DISPERSIVE_LIMIT:
            msg = '|g/delta| = %.3g exceeds the dispersive limit %g' % (abs(self.g / self.delta), DISPERSIVE_LIMIT)
            logger.warning(msg)
            warnings.warn(msg, DispersiveWarning)

    @property
    def delta_r(self):
        return 0.0


DerivedRates = namedtuple('DerivedRates', ('chi', 'lam', 'alpha', 'Gamma_d', 'Gamma_m', 'gamma_p'))


def derive_rates(p):
    """
    chi = g^2/delta; lambda = g/delta; alpha = -2i epsilon/kappa; Gamma_d = 8|alpha|^2 chi^2/kappa;
    gamma_p = kappa lambda^2; Gamma_m = 2 eta Gamma_d
    :param p: PhysicalParams
    :return: DerivedRates
    """
    if p.delta == 0 or p.kappa == 0:
        raise InvalidParameters('derive_rates requires nonzero delta and kappa')
    chi = p.g ** 2 / p.delta
    lam = p.g / p.delta
    alpha = -2j * p.epsilon / p.kappa
    gamma_d = 8 * abs(alpha) ** 2 * chi ** 2 / p.kappa
    gamma_p = p.kappa * lam ** 2
    return DerivedRates(chi, lam, alpha, gamma_d, 2 * p.eta * gamma_d, gamma_p)


@dataclass(frozen=True)
class ModelRates:
    """
    Every rate entering the conditional master equation.  Gamma_m = 2 eta Gamma_d; the unmonitored share of the
    measurement dephasing is implied by Gamma_m < 2 Gamma_d.
    """
    chi_alpha2: float = 0.0
    Gamma_d: float = 0.0
    Gamma_m: float = 0.0
    gamma_p: float = 0.0
    gamma_relax: tuple = (0.0, 0.0)
    gamma_phi: tuple = (0.0, 0.0)
    purcell_sign: str = 'minus'

    def __post_init__(self):
        object.__setattr__(self, 'gamma_relax', tuple(float(k) for k in self.gamma_relax))
        object.__setattr__(self, 'gamma_phi', tuple(float(k) for k in self.gamma_phi))
        if len(self.gamma_relax) != 2 or len(self.gamma_phi) != 2:
            raise InvalidParameters('gamma_relax and gamma_phi take one rate per qubit')
        for name in ('Gamma_d', 'Gamma_m', 'gamma_p'):
            if not getattr(self, name) >= 0:
                raise InvalidParameters('%s must be nonnegative' % name)
        if min(self.gamma_relax + self.gamma_phi) < 0:
            raise InvalidParameters('Noise rates must be nonnegative')
        if self.Gamma_m > 2 * self.Gamma_d * (1 + 1e-12):
            raise InvalidParameters('Gamma_m = %g exceeds 2 Gamma_d (eta > 1)' % self.Gamma_m)
        if self.purcell_sign not in PURCELL_SIGNS:
            raise InvalidParameters('purcell_sign must be one of %s' % (PURCELL_SIGNS,))

    @classmethod
    def from_efficiency(cls, chi_alpha2=0.0, Gamma_d=0.0, gamma_p=0.0, eta=1.0, **kwargs):
        if not 0 < eta <= 1:
            raise InvalidParameters('Efficiency eta must lie in (0, 1], got %g' % eta)
        return cls(chi_alpha2=chi_alpha2, Gamma_d=Gamma_d, Gamma_m=2 * eta * Gamma_d, gamma_p=gamma_p, **kwargs)

    @classmethod
    def from_physical(cls, params, gamma_relax=(0.0, 0.0), gamma_phi=(0.0, 0.0), purcell_sign='minus',
                      normalize=True):
        """
        :param params: PhysicalParams
        :param gamma_relax: per-qubit relaxation rates, in units of Gamma_d if normalize
        :param gamma_phi: per-qubit dephasing rates, in units of Gamma_d if normalize
        :param purcell_sign: 'minus' for g_1 = -g_2, 'plus' for g_1 = g_2
        :param normalize: [True] express derived rates in units of Gamma_d (requires a drive)
        """
        d = derive_rates(params)
        scale = 1.0
        if normalize:
            if d.Gamma_d == 0:
                raise InvalidParameters('Cannot normalize to Gamma_d = 0 (no measurement drive)')
            scale = d.Gamma_d
        return cls(chi_alpha2=d.chi * abs(d.alpha) ** 2 / scale,
                   Gamma_d=d.Gamma_d / scale,
                   Gamma_m=d.Gamma_m / scale,
                   gamma_p=d.gamma_p / scale,
                   gamma_relax=gamma_relax, gamma_phi=gamma_phi, purcell_sign=purcell_sign)

    @property
    def eta(self):
        if self.Gamma_d == 0:
            return 1.0
        return self.Gamma_m / (2 * self.Gamma_d)

    @property
    def purcell_op(self):
        return PURCELL_OPS[self.purcell_sign]

    def replace(self, **kwargs):
        return replace(self, **kwargs)


def dissipator(a, rho):
    """
    D[A]rho = A rho A^+ - 1/2 {A^+ A, rho}
    """
    a = as_matrix(a)
    rho = as_matrix(rho)
    ad = dagger(a)
    return a @ rho @ ad - 0.5 * anticommutator(ad @ a, rho)


def unravel_linear(a, rho):
    a = as_matrix(a)
    rho = as_matrix(rho)
    return a @ rho + rho @ dagger(a)


def unravel(a, rho):
    """
    H[A]rho = A rho + rho A^+ - Tr[(A + A^+) rho] rho
    """
    a = as_matrix(a)
    rho = as_matrix(rho)
    lin = unravel_linear(a, rho)
    return lin - np.trace(lin) * rho


def feedback_superop(f, rho):
    """
    K rho = -i [F, rho]
    """
    return -1j * commutator(as_matrix(f), as_matrix(rho))


def qte_drift(rho, r):
    """
    Deterministic part of the conditional master equation; linear in rho.
    :param rho:
    :param r: ModelRates
    :return: 4x4 Hermitian, traceless
    """
    rho = as_matrix(rho)
    out = np.zeros((DIM, DIM), dtype=complex)
    if r.chi_alpha2:
        out += -1j * r.chi_alpha2 * commutator(JZ, rho)
    for gamma, sm in zip(r.gamma_relax, SIGMA_MINUS):
        if gamma:
            out += gamma * dissipator(sm, rho)
    for gamma, sz in zip(r.gamma_phi, SIGMA_Z):
        if gamma:
            out += 0.5 * gamma * dissipator(sz, rho)
    if r.gamma_p:
        out += r.gamma_p * dissipator(r.purcell_op, rho)
    if r.Gamma_d:
        out += 0.5 * r.Gamma_d * dissipator(JZ, rho)
    return out


def qte_diffusion(rho, r):
    """
    (sqrt(Gamma_m)/2) H[J_z] rho
    """
    return 0.5 * np.sqrt(r.Gamma_m) * unravel(JZ, rho)


FeedbackTerms = namedtuple('FeedbackTerms', ('drift', 'diffusion'))


def markovian_fb_terms(rho, r, f):
    """
    Extra terms of the Markovian (tau = 0) feedback equation for H_fb = I_hom(t) F:

        drift     += (sqrt(Gamma_m)/2) K(J_z rho + rho J_z) + 1/2 K^2 rho
        diffusion += K rho

    with K rho = -i[F, rho] and K^2 rho = -[F, [F, rho]].
    :param rho:
    :param r: ModelRates
    :param f: Hermitian feedback operator, gain included
    :return: FeedbackTerms(drift, diffusion)
    """
    f = as_matrix(f)
    if not is_hermitian(f):
        raise NonHermitianInput('Feedback operator must be Hermitian')
    rho = as_matrix(rho)
    k_rho = feedback_superop(f, rho)
    drift = (0.5 * np.sqrt(r.Gamma_m) * feedback_superop(f, anticommutator(JZ, rho))
             + 0.5 * feedback_superop(f, k_rho))
    return FeedbackTerms(drift, k_rho)


def superoperator_matrix(fn):
    """
    Matrix of a linear superoperator acting on row-major vectorized 4x4 matrices: vec(fn(rho)) = S @ vec(rho)
    """
    s = np.zeros((DIM * DIM, DIM * DIM), dtype=complex)
    for k in range(DIM * DIM):
        e = np.zeros(DIM * DIM, dtype=complex)
        e[k] = 1.0
        s[:, k] = as_matrix(fn(e.reshape(DIM, DIM))).reshape(-1)
    return s


def liouvillian(r):
    """
    16x16 generator of the unconditional (noise-averaged) master equation
    """
    return superoperator_matrix(lambda x: qte_drift(x, r))


def hamiltonian(r):
    return r.chi_alpha2 * JZ


def measurement_operator(r):
    """
    Monitored channel c = (sqrt(Gamma_m)/2) J_z; the homodyne increment is Tr[(c + c^+) rho] dt + dW
    """
    return 0.5 * np.sqrt(r.Gamma_m) * JZ


def jump_operators(r, monitored=True):
    """
    Lindblad operators L_k with sum_k D[L_k] equal to the dissipative part of the drift.  If monitored, the
    measurement channel is split: its monitored share c = measurement_operator(r) is left out and only the
    unmonitored remainder (rate (Gamma_d - Gamma_m/2)/2 on J_z) is returned.
    :param r: ModelRates
    :param monitored: [True]
    :return: list of 4x4 arrays
    """
    ops = []
    for gamma, sm in zip(r.gamma_relax, SIGMA_MINUS):
        if gamma:
            ops.append(np.sqrt(gamma) * sm)
    for gamma, sz in zip(r.gamma_phi, SIGMA_Z):
        if gamma:
            ops.append(np.sqrt(0.5 * gamma) * sz)
    if r.gamma_p:
        ops.append(np.sqrt(r.gamma_p) * r.purcell_op)
    rate = 0.5 * r.Gamma_d
    if monitored:
        rate -= 0.25 * r.Gamma_m
    if rate > 0:
        ops.append(np.sqrt(rate) * JZ)
    return ops
