"""Two-link planar revolute arm: ground-truth plant for identification runs.

Joint angles are measured from the horizontal x axis with gravity acting
along -y, so gravity torques enter through cos(q1) and cos(q1 + q2). The
rigid dynamics are linear in five base parameters; the simulated measurement
adds viscous and Coulomb friction plus Gaussian noise, effects the linear
regressor cannot express.
"""

from dataclasses import dataclass

import numpy as np

N_DOF = 2
N_BASE_PARAMS = 5


@dataclass(frozen=True)
class JointState:
    """One motion sample (q, qd, qdd), each of length N_DOF, finite."""

    q: np.ndarray
    qd: np.ndarray
    qdd: np.ndarray

    def __post_init__(self):
        for name in ("q", "qd", "qdd"):
            v = np.asarray(getattr(self, name), dtype=float).ravel()
            if v.shape != (N_DOF,):
                raise ValueError(f"{name} must have length {N_DOF}")
            if not np.isfinite(v).all():
                raise ValueError(f"{name} contains non-finite entries")
            object.__setattr__(self, name, v)

    @property
    def flat(self):
        """The raw estimator input, (q, qd, qdd) concatenated."""
        return np.concatenate((self.q, self.qd, self.qdd))


@dataclass(frozen=True)
class PlanarArmModel:
    """Physical description of the plant.

    l1, l2: link lengths (m); m1, m2: link masses (kg); lc1, lc2: center of
    mass offsets along each link (m); i1, i2: link inertias about their COM
    (kg m**2). viscous (N m s/rad) and coulomb (N m) are per-joint friction
    coefficients; noise_std (N m) is the measurement noise level.
    """

    l1: float = 0.4
    l2: float = 0.3
    m1: float = 1.2
    m2: float = 0.8
    lc1: float = 0.2
    lc2: float = 0.15
    i1: float = 0.016
    i2: float = 0.006
    gravity: float = 9.81
    viscous: tuple = (0.0, 0.0)
    coulomb: tuple = (0.0, 0.0)
    noise_std: float = 0.0

    def __post_init__(self):
        if self.m1 <= 0 or self.m2 <= 0:
            raise ValueError("link masses must be positive")
        if self.l1 <= 0 or self.l2 <= 0:
            raise ValueError("link lengths must be positive")
        if self.i1 < 0 or self.i2 < 0 or self.noise_std < 0:
            raise ValueError("inertias and noise_std must be non-negative")
        if len(self.viscous) != N_DOF or len(self.coulomb) != N_DOF:
            raise ValueError("need one friction coefficient per joint")
        if min(self.viscous) < 0 or min(self.coulomb) < 0:
            raise ValueError("friction coefficients must be non-negative")


def base_params(model):
    """The five identifiable parameter combinations (a1, a2, a3, g1, g2).

    a1 = m1 lc1**2 + i1 + m2 l1**2    (shoulder-centric inertia)
    a2 = m2 lc2**2 + i2               (elbow link inertia)
    a3 = m2 l1 lc2                    (coupling first moment)
    g1 = (m1 lc1 + m2 l1) g           (shoulder gravity moment)
    g2 = m2 lc2 g                     (elbow gravity moment)
    """
    return np.array([
        model.m1 * model.lc1 ** 2 + model.i1 + model.m2 * model.l1 ** 2,
        model.m2 * model.lc2 ** 2 + model.i2,
        model.m2 * model.l1 * model.lc2,
        (model.m1 * model.lc1 + model.m2 * model.l1) * model.gravity,
        model.m2 * model.lc2 * model.gravity,
    ])


def regressor(state):
    """2 x 5 torque regressor: rigid torques = regressor(state) @ base_params.

    Depends on the motion state only, never on inertial parameters.
    """
    q1, q2 = state.q
    qd1, qd2 = state.qd
    qdd1, qdd2 = state.qdd
    c1 = np.cos(q1)
    c2 = np.cos(q2)
    s2 = np.sin(q2)
    c12 = np.cos(q1 + q2)
    return np.array([
        [qdd1, qdd1 + qdd2,
         c2 * (2.0 * qdd1 + qdd2) - s2 * (qd2 ** 2 + 2.0 * qd1 * qd2),
         c1, c12],
        [0.0, qdd1 + qdd2,
         c2 * qdd1 + s2 * qd1 ** 2,
         0.0, c12],
    ])


def simulate_output(model, state, rng):
    """Measured joint torques: rigid model plus friction plus noise.

    y = Phi(state) @ pi + viscous * qd + coulomb * sign(qd) + noise, with
    sign(0) = 0 so a joint at rest feels no Coulomb torque. Deterministic
    for a given generator state.
    """
    y = regressor(state) @ base_params(model)
    y = y + np.asarray(model.viscous) * state.qd
    y = y + np.asarray(model.coulomb) * np.sign(state.qd)
    if model.noise_std > 0.0:
        y = y + model.noise_std * rng.standard_normal(N_DOF)
    return y


def trajectory(terms, rate_hz, n_samples):
    """Multi-sine excitation with exact analytic derivatives.

    terms gives, per joint, a list of (amplitude, frequency_hz, phase) sine
    components: q_j(t) = sum_k A_k sin(2 pi f_k t + ph_k), sampled at
    t_i = i / rate_hz. Velocities and accelerations are the analytic
    derivatives, not finite differences.

    Returns (t, states): the sample times and a list of JointState.
    """
    rate_hz = float(rate_hz)
    n_samples = int(n_samples)
    if rate_hz <= 0.0:
        raise ValueError("rate_hz must be positive")
    if n_samples < 1:
        raise ValueError("n_samples must be positive")
    if len(terms) != N_DOF:
        raise ValueError(f"need term lists for exactly {N_DOF} joints")
    t = np.arange(n_samples) / rate_hz
    q = np.zeros((n_samples, N_DOF))
    qd = np.zeros((n_samples, N_DOF))
    qdd = np.zeros((n_samples, N_DOF))
    for j, joint_terms in enumerate(terms):
        for amplitude, freq, phase in joint_terms:
            if freq <= 0.0:
                raise ValueError("term frequencies must be positive")
            w = 2.0 * np.pi * freq
            arg = w * t + phase
            q[:, j] += amplitude * np.sin(arg)
            qd[:, j] += amplitude * w * np.cos(arg)
            qdd[:, j] -= amplitude * w ** 2 * np.sin(arg)
    states = [JointState(q[i], qd[i], qdd[i]) for i in range(n_samples)]
    return t, states
