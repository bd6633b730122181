"""Discretized matrix-valued processes.

Hermitian matrix Brownian motion normalized so E tr_n((X(t)-X(s))^2)
equals t - s, finite-variation paths, stopping, Doleans time-marginal
estimation, and the NCP1 binary path format.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np

from .matrix_alg import hermitian_onb_array, lp_norm

_ROLE_CODES = {"martingale": 0, "fv": 1, "decomposable": 2}
_ROLE_NAMES = {v: k for k, v in _ROLE_CODES.items()}


@dataclass(frozen=True)
class TimeGrid:
    """Strictly increasing grid starting at 0."""

    times: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        if t.ndim != 1 or len(t) < 1:
            raise ValueError("grid needs at least one time")
        if t[0] != 0.0:
            raise ValueError("grid must start at 0")
        if len(t) > 1 and np.any(np.diff(t) <= 0):
            raise ValueError("grid times must be strictly increasing")
        t.setflags(write=False)
        object.__setattr__(self, "times", t)

    @classmethod
    def uniform(cls, horizon: float, steps: int) -> "TimeGrid":
        if steps < 1 or horizon <= 0:
            raise ValueError("need a positive horizon and step count")
        return cls(np.linspace(0.0, horizon, steps + 1))

    @classmethod
    def from_mesh(cls, horizon: float, mesh: float) -> "TimeGrid":
        steps = max(1, int(round(horizon / mesh)))
        return cls.uniform(horizon, steps)

    @property
    def mesh(self) -> float:
        if len(self.times) == 1:
            return 0.0
        return float(np.max(np.diff(self.times)))

    @property
    def steps(self) -> int:
        return len(self.times) - 1

    def index_of(self, t: float) -> int:
        idx = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[idx] - t) > 1e-9 * max(1.0, abs(t)):
            raise ValueError(f"time {t} is not on the grid")
        return idx

    def __eq__(self, other):
        return isinstance(other, TimeGrid) and np.array_equal(
            self.times, other.times
        )

    def __hash__(self):
        return hash(self.times.tobytes())


class RngStream:
    """Counter-based random stream keyed by (master seed, path index).

    Distinct path indices give independent streams; a path's draws do not
    depend on which worker generates it.
    """

    def __init__(self, master_seed: int, path_index: int = 0):
        self.master_seed = int(master_seed)
        self.path_index = int(path_index)
        key = np.random.SeedSequence((self.master_seed, self.path_index))
        self.generator = np.random.Generator(np.random.Philox(key))

    def child(self, path_index: int) -> "RngStream":
        return RngStream(self.master_seed, path_index)


@dataclass(frozen=True)
class ProcessPath:
    """One discretized path: values[i] is the matrix at grid.times[i]."""

    grid: TimeGrid
    values: np.ndarray  # (T, n, n) complex
    role: str
    seed_info: tuple | None = None
    mart_part: np.ndarray | None = None
    fv_part: np.ndarray | None = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.ndim != 3 or v.shape[0] != len(self.grid.times) or (
            v.shape[1] != v.shape[2]
        ):
            raise ValueError("values must have shape (T, n, n)")
        object.__setattr__(self, "values", v)
        if self.role not in _ROLE_CODES:
            raise ValueError(f"unknown role {self.role!r}")
        if self.role == "decomposable":
            if self.mart_part is None or self.fv_part is None:
                raise ValueError("decomposable paths need both parts")
            total = self.mart_part + self.fv_part
            if not np.array_equal(total, v):
                raise ValueError("decomposition must sum to the path values")
            if np.any(self.fv_part[0] != 0):
                raise ValueError("the FV part must start at 0")

    @property
    def n(self) -> int:
        return self.values.shape[-1]

    def at(self, t: float) -> np.ndarray:
        return self.values[self.grid.index_of(t)]


@dataclass(frozen=True)
class Ensemble:
    """A batch of independent paths on one grid: values (P, T, n, n)."""

    grid: TimeGrid
    values: np.ndarray
    role: str
    seed_info: tuple | None = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.ndim != 4 or v.shape[1] != len(self.grid.times):
            raise ValueError("values must have shape (paths, T, n, n)")
        object.__setattr__(self, "values", v)

    @property
    def n_paths(self) -> int:
        return self.values.shape[0]

    @property
    def n(self) -> int:
        return self.values.shape[-1]

    def path(self, index: int) -> ProcessPath:
        return ProcessPath(
            self.grid, self.values[index], self.role, self.seed_info
        )


def _hbm_increments_basis(n, dts, rng) -> np.ndarray:
    onb = hermitian_onb_array(n).reshape(n * n, n * n)
    coeffs = rng.standard_normal((len(dts), n * n)) * np.sqrt(dts)[:, None]
    return (coeffs @ onb).reshape(len(dts), n, n)


def _hbm_increments_entrywise(n, dts, rng) -> np.ndarray:
    steps = len(dts)
    sd = np.sqrt(dts)
    diag = rng.standard_normal((steps, n)) * sd[:, None]
    re = rng.standard_normal((steps, n, n))
    im = rng.standard_normal((steps, n, n))
    h = np.zeros((steps, n, n), dtype=complex)
    iu = np.triu_indices(n, k=1)
    g = (re[:, iu[0], iu[1]] + 1j * im[:, iu[0], iu[1]]) / np.sqrt(2.0)
    h[:, iu[0], iu[1]] = g * sd[:, None]
    h[:, iu[1], iu[0]] = np.conj(g) * sd[:, None]
    h[:, np.arange(n), np.arange(n)] = diag
    return h / np.sqrt(n)


def simulate_hbm(n: int, grid: TimeGrid, stream: RngStream,
                 method: str = "basis") -> ProcessPath:
    """One Hermitian-BM path with X(0) = 0.

    "basis" draws the coefficients over the orthonormal Hermitian basis,
    which carries the normalization by construction; "entrywise" scales a
    GUE Brownian motion by 1/sqrt(n).  The two agree in law.
    """
    if n < 1:
        raise ValueError("dimension must be >= 1")
    dts = np.diff(grid.times)
    if method == "basis":
        inc = _hbm_increments_basis(n, dts, stream.generator)
    elif method == "entrywise":
        inc = _hbm_increments_entrywise(n, dts, stream.generator)
    else:
        raise ValueError(f"unknown method {method!r}")
    values = np.zeros((len(grid.times), n, n), dtype=complex)
    np.cumsum(inc, axis=0, out=values[1:])
    return ProcessPath(
        grid, values, "martingale",
        seed_info=(stream.master_seed, stream.path_index, method),
    )


def simulate_hbm_ensemble(n: int, grid: TimeGrid, n_paths: int, seed: int,
                          method: str = "basis") -> Ensemble:
    """Independent HBM paths; path i uses the stream keyed (seed, i), so
    the result is identical no matter how generation is scheduled."""
    values = np.empty((n_paths, len(grid.times), n, n), dtype=complex)
    for i in range(n_paths):
        values[i] = simulate_hbm(n, grid, RngStream(seed, i), method).values
    return Ensemble(grid, values, "martingale", seed_info=(seed, method))


def make_fv(grid: TimeGrid, n: int,
            g: Callable[[float], float] | None = None,
            generator: Callable[[float], np.ndarray] | None = None) -> ProcessPath:
    """Finite-variation path: scalar g(t)*I or a smooth matrix generator."""
    if (g is None) == (generator is None):
        raise ValueError("give exactly one of g or generator")
    if g is not None:
        values = np.stack(
            [complex(g(t)) * np.eye(n, dtype=complex) for t in grid.times]
        )
    else:
        values = np.stack(
            [np.asarray(generator(t), dtype=complex) for t in grid.times]
        )
        if values.shape[1:] != (n, n):
            raise ValueError("generator output has the wrong dimension")
    return ProcessPath(grid, values, "fv")


def variation(path: ProcessPath, s: float = None, t: float = None,
              p: float = np.inf) -> float:
    """Grid total variation sum ||Delta A|| over (s, t]."""
    i0 = 0 if s is None else path.grid.index_of(s)
    i1 = len(path.grid.times) - 1 if t is None else path.grid.index_of(t)
    return float(
        sum(
            lp_norm(path.values[i + 1] - path.values[i], p)
            for i in range(i0, i1)
        )
    )


def stop(path: ProcessPath, t: float) -> ProcessPath:
    """Freeze the path after time t (grid projection of X(. ^ t))."""
    if t < 0:
        raise ValueError("stopping time must be >= 0")
    idx = int(np.searchsorted(path.grid.times, t, side="right") - 1)
    values = path.values.copy()
    values[idx + 1:] = values[idx]
    out = replace(path, values=values)
    if path.role == "decomposable":
        mart = path.mart_part.copy()
        mart[idx + 1:] = mart[idx]
        fv = path.fv_part.copy()
        fv[idx + 1:] = fv[idx]
        out = replace(out, mart_part=mart, fv_part=fv)
    return out


def kappa_estimate(ensemble: Ensemble, s: float, t: float):
    """Monte-Carlo estimate of kappa((s, t]) = E tr_n |M(t) - M(s)|^2.

    Returns (estimate, standard error).
    """
    if ensemble.n_paths == 0:
        raise ValueError("empty ensemble")
    if not s < t:
        raise ValueError("need s < t")
    i0, i1 = ensemble.grid.index_of(s), ensemble.grid.index_of(t)
    d = ensemble.values[:, i1] - ensemble.values[:, i0]
    per_path = np.einsum("pij,pij->p", d, np.conj(d)).real / ensemble.n
    est = float(np.mean(per_path))
    se = float(np.std(per_path, ddof=1) / np.sqrt(len(per_path)))
    return est, se


# -- NCP1 binary format ---------------------------------------------------


def _write_values(fh, values: np.ndarray):
    # complex128 viewed as float64 pairs is exactly (re, im) interleaved
    flat = np.ascontiguousarray(values, dtype="<c16")
    fh.write(flat.tobytes())


def _read_values(fh, count, n) -> np.ndarray:
    raw = fh.read(count * n * n * 16)
    if len(raw) != count * n * n * 16:
        raise ValueError("truncated NCP1 value block")
    return np.frombuffer(raw, dtype="<c16").reshape(count, n, n).copy()


def save_ncp1(path: ProcessPath, filename: str) -> None:
    """Write a path in the NCP1 little-endian binary format."""
    with open(filename, "wb") as fh:
        t = len(path.grid.times)
        fh.write(struct.pack("<4sIIB", b"NCP1", path.n, t,
                             _ROLE_CODES[path.role]))
        fh.write(np.ascontiguousarray(path.grid.times, dtype="<f8").tobytes())
        _write_values(fh, path.values)
        if path.role == "decomposable":
            _write_values(fh, path.mart_part)
            _write_values(fh, path.fv_part)


def load_ncp1(filename: str) -> ProcessPath:
    """Read a path written by :func:`save_ncp1` (bit-exact round trip)."""
    with open(filename, "rb") as fh:
        header = fh.read(struct.calcsize("<4sIIB"))
        magic, n, t, role_code = struct.unpack("<4sIIB", header)
        if magic != b"NCP1":
            raise ValueError("not an NCP1 file")
        if role_code not in _ROLE_NAMES:
            raise ValueError(f"unknown role code {role_code}")
        times = np.frombuffer(fh.read(t * 8), dtype="<f8").copy()
        values = _read_values(fh, t, n)
        role = _ROLE_NAMES[role_code]
        mart = fv = None
        if role == "decomposable":
            mart = _read_values(fh, t, n)
            fv = _read_values(fh, t, n)
    return ProcessPath(TimeGrid(times), values, role,
                       mart_part=mart, fv_part=fv)
