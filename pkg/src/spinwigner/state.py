"""Spin-j density matrices, multipoles, rotations and the qubit dephasing channel.

Basis ordering is fixed everywhere: row/column ``a`` is the Dicke state
m = j - a, i.e. m runs j, j-1, ..., -j. For a qubit the labels are
|0> = (m = +1/2) and |1> = (m = -1/2); which physical m_s level carries
which label does not enter the mathematics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .angular import HalfInt, multipole_table
from .linalg import eigh_jacobi, sqrtm_psd

__all__ = [
    "HERMITIAN_TOL",
    "TRACE_TOL",
    "PSD_TOL",
    "MEASURED_Y_STATE",
    "DensityMatrix",
    "MultipoleDecomposition",
    "UnitaryMatrix",
    "DephasingModel",
    "spin_operators",
    "pure_qubit",
    "spin_coherent",
    "maximally_mixed",
    "random_density_matrix",
    "rho_to_multipole",
    "multipole_to_rho",
    "rotation_unitary",
    "rotation_unitaries",
    "dephase_qubit",
    "uhlmann_fidelity",
    "matrix_purity",
    "expectation",
    "bloch_vector",
    "bloch_inversion",
]

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
PSD_TOL = 1e-10
_EIG_FLOOR = 1e-14  # relative; roundoff-level eigenvalues treated as exact zeros

# Tomography of the prepared |y> state in the modeled experiment, stored as
# measured: Im rho_01 and Im rho_10 differ, and the Bloch length exceeds 1.
MEASURED_Y_STATE = np.array([[0.482, -0.026 - 0.518j],
                             [-0.026 + 0.516j, 0.518]])

PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)


def _dim(j: HalfInt) -> int:
    return j.twice_value + 1


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Hermitian, unit-trace matrix in the Dicke basis (m = j ... -j).

    Hermiticity and trace are always enforced. PSD (eigenvalues >= -1e-10)
    is enforced unless ``check_psd=False``, which exists so raw measured
    matrices that are slightly unphysical can still be represented.
    """

    j: HalfInt
    entries: np.ndarray
    check_psd: bool = True

    def __post_init__(self):
        j = HalfInt.of(self.j)
        if j.twice_value < 0:
            raise ValueError("j must be >= 0")
        m = np.array(self.entries, dtype=complex)
        d = _dim(j)
        if m.shape != (d, d):
            raise ValueError(f"spin {j} needs a {d}x{d} matrix, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise ValueError("density matrix has non-finite entries")
        herm = float(np.max(np.abs(m - m.conj().T)))
        if herm > HERMITIAN_TOL:
            raise ValueError(f"density matrix is not Hermitian (max |rho - rho^H| = {herm:.3e})")
        tr = np.trace(m).real
        if abs(tr - 1.0) > TRACE_TOL:
            raise ValueError(f"density matrix trace is {tr!r}, expected 1")
        if self.check_psd:
            w, _ = eigh_jacobi(m)
            if w[0] < -PSD_TOL:
                raise ValueError(f"density matrix is not positive semidefinite (min eigenvalue {w[0]:.3e})")
        m.setflags(write=False)
        object.__setattr__(self, "j", j)
        object.__setattr__(self, "entries", m)

    @property
    def dim(self) -> int:
        return _dim(self.j)

    @property
    def m_values(self) -> np.ndarray:
        return np.arange(self.j.twice_value, -self.j.twice_value - 1, -2) / 2.0

    def to_json(self) -> dict:
        return {"j_twice": self.j.twice_value,
                "re": self.entries.real.tolist(),
                "im": self.entries.imag.tolist()}

    @classmethod
    def from_json(cls, obj: dict, check_psd: bool = True) -> "DensityMatrix":
        try:
            j = HalfInt(int(obj["j_twice"]))
            m = np.asarray(obj["re"], dtype=float) + 1j * np.asarray(obj["im"], dtype=float)
        except (KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"malformed density-matrix JSON: {exc}") from exc
        return cls(j, m, check_psd=check_psd)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.entries, dtype=dtype)


@dataclass(frozen=True, eq=False)
class MultipoleDecomposition:
    """Coefficients rho_kq stored flat at index k*k + k + q, k = 0..2j."""

    j: HalfInt
    coeffs: np.ndarray

    def __post_init__(self):
        j = HalfInt.of(self.j)
        c = np.array(self.coeffs, dtype=complex).ravel()
        n = (j.twice_value + 1) ** 2
        if c.size != n:
            raise ValueError(f"spin {j} needs {n} multipole coefficients, got {c.size}")
        c.setflags(write=False)
        object.__setattr__(self, "j", j)
        object.__setattr__(self, "coeffs", c)

    @property
    def kmax(self) -> int:
        return self.j.twice_value

    def get(self, k: int, q: int) -> complex:
        if not 0 <= k <= self.kmax or abs(q) > k:
            raise ValueError(f"(k, q) = ({k}, {q}) out of range for j = {self.j}")
        return complex(self.coeffs[k * k + k + q])

    def block_norms(self) -> np.ndarray:
        """sum_q |rho_kq|^2 for each k."""
        return np.array([np.sum(np.abs(self.coeffs[k * k:(k + 1) ** 2]) ** 2)
                         for k in range(self.kmax + 1)])

    def is_hermitian(self, tol: float = HERMITIAN_TOL) -> bool:
        """Checks rho_{k,-q} = (-1)^q conj(rho_kq)."""
        for k in range(self.kmax + 1):
            for q in range(1, k + 1):
                if abs(self.get(k, -q) - (-1) ** q * np.conj(self.get(k, q))) > tol:
                    return False
            if abs(self.get(k, 0).imag) > tol:
                return False
        return True


@dataclass(frozen=True, eq=False)
class UnitaryMatrix:
    j: HalfInt
    entries: np.ndarray

    def __post_init__(self):
        j = HalfInt.of(self.j)
        u = np.array(self.entries, dtype=complex)
        d = _dim(j)
        if u.shape != (d, d):
            raise ValueError(f"spin {j} needs a {d}x{d} matrix")
        if np.max(np.abs(u @ u.conj().T - np.eye(d))) > 1e-12:
            raise ValueError("matrix is not unitary")
        u.setflags(write=False)
        object.__setattr__(self, "j", j)
        object.__setattr__(self, "entries", u)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.entries, dtype=dtype)


@dataclass(frozen=True)
class DephasingModel:
    """Gaussian pure dephasing: coherences decay as exp[-(tau / t2_star)^2]."""

    t2_star: float = 2.64  # us

    def __post_init__(self):
        if not (self.t2_star > 0 and math.isfinite(self.t2_star)):
            raise ValueError("t2_star must be positive and finite")

    def coherence(self, tau):
        return np.exp(-(np.asarray(tau, dtype=float) / self.t2_star) ** 2)


@lru_cache(maxsize=None)
def _spin_ops(tj: int):
    d = tj + 1
    m = (tj - 2 * np.arange(d)) / 2.0
    j = tj / 2.0
    jp = np.zeros((d, d))
    # <m+1| J+ |m> = sqrt(j(j+1) - m(m+1)); row a-1 is m+1
    for a in range(1, d):
        mm = m[a]
        jp[a - 1, a] = math.sqrt(j * (j + 1) - mm * (mm + 1))
    jx = (jp + jp.T) / 2.0 + 0j
    jy = (jp - jp.T) / 2j
    jz = np.diag(m) + 0j
    for a in (jx, jy, jz):
        a.setflags(write=False)
    return jx, jy, jz


def spin_operators(j):
    """(Jx, Jy, Jz) for spin j in the m = j ... -j basis (read-only arrays)."""
    j = HalfInt.of(j)
    if j.twice_value < 0:
        raise ValueError("j must be >= 0")
    return _spin_ops(j.twice_value)


def expectation(rho: DensityMatrix, op) -> float:
    return float(np.trace(np.asarray(rho) @ np.asarray(op)).real)


def maximally_mixed(j) -> DensityMatrix:
    j = HalfInt.of(j)
    d = _dim(j)
    return DensityMatrix(j, np.eye(d) / d)


def random_density_matrix(j, rng: np.random.Generator, rank: int | None = None) -> DensityMatrix:
    """Ginibre-ensemble random state (full rank unless ``rank`` is given)."""
    j = HalfInt.of(j)
    d = _dim(j)
    r = d if rank is None else rank
    g = rng.normal(size=(d, r)) + 1j * rng.normal(size=(d, r))
    m = g @ g.conj().T
    m = 0.5 * (m + m.conj().T)
    return DensityMatrix(j, m / np.trace(m).real)


def pure_qubit(eps: float, eta: float) -> DensityMatrix:
    """Projector onto cos(eps/2)|0> + e^{i eta} sin(eps/2)|1>.

    Bloch vector (sin eps cos eta, sin eps sin eta, cos eps).
    """
    psi = np.array([math.cos(eps / 2), np.exp(1j * eta) * math.sin(eps / 2)])
    return DensityMatrix(HalfInt(1), np.outer(psi, psi.conj()))


@lru_cache(maxsize=None)
def _jx_eig(tj: int):
    jx, _, _ = _spin_ops(tj)
    return eigh_jacobi(jx)


def rotation_unitaries(j, theta, phi) -> np.ndarray:
    """exp[-i theta (cos phi Jx + sin phi Jy)] for arrays of angles, shape (n, d, d).

    The generator is Rz(phi) Jx Rz(phi)^H with Rz = exp(-i phi Jz) diagonal,
    so one cached Jacobi eigendecomposition of Jx serves every (theta, phi).
    """
    j = HalfInt.of(j)
    tj = j.twice_value
    theta, phi = np.broadcast_arrays(np.asarray(theta, dtype=float), np.asarray(phi, dtype=float))
    theta, phi = theta.ravel(), phi.ravel()
    if tj == 0:
        return np.ones((theta.size, 1, 1), dtype=complex)
    lam, v = _jx_eig(tj)
    m = (tj - 2 * np.arange(tj + 1)) / 2.0
    # exp(-i theta Jx) per node
    core = np.einsum("ak,nk,bk->nab", v, np.exp(-1j * np.outer(theta, lam)), v.conj())
    rz = np.exp(-1j * np.outer(phi, m))  # diagonal of Rz(phi)
    return rz[:, :, None] * core * rz.conj()[:, None, :]


def rotation_unitary(j, theta: float, phi: float) -> UnitaryMatrix:
    """U(theta, phi) = exp[-i theta (cos phi Jx + sin phi Jy)].

    For j = 1/2 this is exp[-i theta/2 (cos phi sx + sin phi sy)]. It rotates
    spin directions by +theta about the equatorial axis (cos phi, sin phi, 0),
    so U|m=j> points along (theta, phi - pi/2).
    """
    j = HalfInt.of(j)
    return UnitaryMatrix(j, rotation_unitaries(j, theta, phi)[0])


def spin_coherent(j, eps: float, eta: float) -> DensityMatrix:
    """Projector onto |m=j> rotated to point along polar eps, azimuth eta."""
    j = HalfInt.of(j)
    u = rotation_unitaries(j, eps, eta + math.pi / 2)[0]
    psi = u[:, 0]
    m = np.outer(psi, psi.conj())
    return DensityMatrix(j, 0.5 * (m + m.conj().T))


def rho_to_multipole(rho: DensityMatrix) -> MultipoleDecomposition:
    """rho_kq = sum_{m m'} rho_{m m'} t^{j m m'}_{k q}."""
    t = multipole_table(rho.j)
    return MultipoleDecomposition(rho.j, np.einsum("iab,ab->i", t, np.asarray(rho)))


def multipole_to_rho(d: MultipoleDecomposition, check_psd: bool = True) -> DensityMatrix:
    """Inverse transform rho_{m m'} = sum_kq rho_kq t^{j m m'}_{k q}.

    The result goes through ``DensityMatrix`` validation, so coefficient sets
    that do not describe a Hermitian unit-trace matrix are rejected.
    """
    if not isinstance(d, MultipoleDecomposition):
        raise TypeError("expected a MultipoleDecomposition")
    t = multipole_table(d.j)
    if t.shape[0] != d.coeffs.size:
        raise ValueError("multipole coefficient count does not match j")
    m = np.einsum("i,iab->ab", d.coeffs, t)
    return DensityMatrix(d.j, m, check_psd=check_psd)


def dephase_qubit(rho: DensityMatrix, tau: float, model: DephasingModel) -> DensityMatrix:
    """Multiply the qubit coherences by exp[-(tau/T2*)^2]; populations unchanged."""
    if rho.j.twice_value != 1:
        raise ValueError("dephase_qubit acts on a qubit (j = 1/2) only")
    if tau < 0:
        raise ValueError("tau must be >= 0")
    c = float(model.coherence(tau))
    m = np.array(rho.entries)
    m[0, 1] *= c
    m[1, 0] *= c
    return DensityMatrix(rho.j, m, check_psd=rho.check_psd)


def _check_pair(r1: DensityMatrix, r2: DensityMatrix):
    if r1.j != r2.j:
        raise ValueError(f"dimension mismatch: j = {r1.j} vs {r2.j}")


def uhlmann_fidelity(rho1: DensityMatrix, rho2: DensityMatrix) -> float:
    """F = (Tr sqrt(sqrt(rho1) rho2 sqrt(rho1)))^2, clipped to [0, 1]."""
    _check_pair(rho1, rho2)
    s = sqrtm_psd(np.asarray(rho1), PSD_TOL, floor=_EIG_FLOOR)
    sqrtm_psd(np.asarray(rho2), PSD_TOL)  # PSD check on the second argument
    inner = s @ np.asarray(rho2) @ s
    w, _ = eigh_jacobi(0.5 * (inner + inner.conj().T))
    w = np.where(w > _EIG_FLOOR * max(w[-1], 0.0), w, 0.0)
    f = float(np.sum(np.sqrt(w))) ** 2
    return min(max(f, 0.0), 1.0)


def matrix_purity(rho: DensityMatrix) -> float:
    m = np.asarray(rho)
    return float(np.sum(np.abs(m) ** 2))


def bloch_vector(rho: DensityMatrix) -> np.ndarray:
    if rho.j.twice_value != 1:
        raise ValueError("Bloch vector is defined for a qubit only")
    return np.array([expectation(rho, p) for p in (PAULI_X, PAULI_Y, PAULI_Z)])


def bloch_inversion(sx: float, sy: float, sz: float, project: bool = False) -> DensityMatrix:
    """Linear inversion rho = (I + s . sigma) / 2 from Pauli expectations.

    With ``project=True`` negative eigenvalues are clipped and the trace
    renormalized (nearest physical state); otherwise |s| > 1 is kept as-is.
    """
    m = 0.5 * (np.eye(2) + sx * PAULI_X + sy * PAULI_Y + sz * PAULI_Z)
    if project:
        w, v = eigh_jacobi(m)
        w = np.clip(w, 0.0, None)
        w /= w.sum()
        m = (v * w) @ v.conj().T
        m = 0.5 * (m + m.conj().T)
        return DensityMatrix(HalfInt(1), m)
    return DensityMatrix(HalfInt(1), m, check_psd=False)
