"""Linear dynamical systems and noisy partially-observed simulation."""

from dataclasses import dataclass

import numpy as np

from . import _kernels
from ._linalg import numerical_rank
from .errors import DimensionError, PreconditionError
from .measurement import MeasurementMatrix

# Independent random streams per trajectory.
STREAM_INPUT = 0
STREAM_PROCESS = 1
STREAM_MEASUREMENT = 2


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class SystemModel:
    """x_{t+1} = A x_t + B u_t + w_t with isotropic Gaussian input and noises."""

    A: np.ndarray
    B: np.ndarray
    sigma_u2: float = 1.0
    sigma_w2: float = 1.0
    sigma_eta2: float = 1.0
    accessible: tuple = None

    def __post_init__(self):
        A = _frozen(self.A)
        B = _frozen(self.B)
        if B.ndim == 1:
            B = _frozen(B.reshape(-1, 1))
        if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] < 1:
            raise DimensionError(f"A must be square and non-empty, got shape {A.shape}")
        if B.ndim != 2 or B.shape[0] != A.shape[0] or B.shape[1] < 1:
            raise DimensionError(f"B must be {A.shape[0]} x m, got shape {B.shape}")
        for name in ("sigma_u2", "sigma_w2", "sigma_eta2"):
            v = float(getattr(self, name))
            if not v >= 0:
                raise PreconditionError(f"{name} must be nonnegative, got {v}")
            object.__setattr__(self, name, v)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        if self.accessible is not None:
            acc = tuple(sorted(int(j) for j in self.accessible))
            MeasurementMatrix(A.shape[0], acc)
            object.__setattr__(self, "accessible", acc)

    @property
    def r(self):
        return self.A.shape[0]

    @property
    def m(self):
        return self.B.shape[1]

    def spectral_radius(self):
        return float(np.max(np.abs(np.linalg.eigvals(self.A))))

    def to_dict(self):
        out = {
            "r": self.r,
            "m": self.m,
            "A": self.A.ravel().tolist(),
            "B": self.B.ravel().tolist(),
            "sigma_u2": self.sigma_u2,
            "sigma_w2": self.sigma_w2,
            "sigma_eta2": self.sigma_eta2,
        }
        if self.accessible is not None:
            out["accessible"] = list(self.accessible)
        return out

    @classmethod
    def from_dict(cls, data):
        r, m = int(data["r"]), int(data["m"])
        A = np.asarray(data["A"], dtype=float)
        B = np.asarray(data["B"], dtype=float)
        if A.size != r * r or B.size != r * m:
            raise DimensionError("A/B array lengths do not match r and m")
        return cls(
            A.reshape(r, r),
            B.reshape(r, m),
            data.get("sigma_u2", 1.0),
            data.get("sigma_w2", 1.0),
            data.get("sigma_eta2", 1.0),
            data.get("accessible"),
        )


@dataclass(frozen=True)
class StabilityParams:
    psi_A: float
    rho_A: float

    def __post_init__(self):
        if not self.psi_A >= 1:
            raise PreconditionError("psi_A must be >= 1")
        if not 0 < self.rho_A < 1:
            raise PreconditionError("rho_A must lie in (0, 1)")


@dataclass(frozen=True, eq=False)
class TrajectoryData:
    measurement: MeasurementMatrix
    inputs: np.ndarray        # (T + 1, m): u_0 .. u_T
    observations: np.ndarray  # (T + 2, n_bar): y_0 .. y_{T+1}
    T: int
    seed: int
    index: int = 0

    def __post_init__(self):
        if self.inputs.shape[0] != self.T + 1:
            raise DimensionError("inputs must hold T + 1 samples")
        if self.observations.shape != (self.T + 2, len(self.measurement)):
            raise DimensionError("observations must be (T + 2) x n_bar")


def stream_rng(seed, index, stream):
    """Counter-based generator keyed by (seed, trajectory index, stream)."""
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(index), int(stream)))
    return np.random.Generator(np.random.Philox(ss))


def simulate_trajectory(model, meas, T, seed, index=0):
    """Simulate one trajectory from x_0 = 0 and observe the coordinates in ``meas``.

    Noise is drawn from independent streams keyed by ``(seed, index)``, so a
    trajectory does not depend on which other trajectories were generated.
    """
    if meas.r != model.r:
        raise DimensionError(f"measurement has r={meas.r}, model has r={model.r}")
    if T < 1:
        raise PreconditionError(f"horizon T must be >= 1, got {T}")
    r, m = model.r, model.m
    u = np.sqrt(model.sigma_u2) * stream_rng(seed, index, STREAM_INPUT).standard_normal((T + 1, m))
    w = np.sqrt(model.sigma_w2) * stream_rng(seed, index, STREAM_PROCESS).standard_normal((T + 1, r))
    eta = np.sqrt(model.sigma_eta2) * stream_rng(seed, index, STREAM_MEASUREMENT).standard_normal((T + 2, r))
    drive = u @ model.B.T + w
    x = _kernels.simulate_states(np.ascontiguousarray(model.A), drive)
    y = np.ascontiguousarray((x + eta)[:, meas.indices])
    u.setflags(write=False)
    y.setflags(write=False)
    return TrajectoryData(meas, u, y, int(T), int(seed), int(index))


def markov_parameters(model, d):
    """Blocks [B, AB, ..., A^d B] as an array of shape (d + 1, r, m)."""
    if d < 0:
        raise PreconditionError("d must be nonnegative")
    A, B = model.A, model.B
    out = np.empty((d + 1, model.r, model.m))
    cur = B.copy()
    for i in range(d + 1):
        out[i] = cur
        cur = A @ cur
    return out


def controllability_matrix(model):
    return np.hstack(list(markov_parameters(model, model.r - 1)))


def is_controllable(model, rel_tol=None):
    if rel_tol is None:
        rel_tol = model.r * np.finfo(float).eps
    return numerical_rank(controllability_matrix(model), rel_tol) == model.r


def verify_stability(model, params, horizon):
    """Check ||A^t|| <= psi_A * rho_A^(t-1) for t = 1..horizon (spectral norm)."""
    if horizon < 1:
        raise PreconditionError("horizon must be >= 1")
    A = model.A
    P = np.eye(model.r)
    for t in range(1, horizon + 1):
        P = P @ A
        if np.linalg.norm(P, 2) > params.psi_A * params.rho_A ** (t - 1):
            return False
    return True
