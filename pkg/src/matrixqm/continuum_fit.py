"""Weighted least-squares continuum extrapolation of lattice energies.

Lattice energies E(T, n_t) carry discretization errors in the spacing
a = 1/(T n_t).  The global fit model is a polynomial in a,

    F(T, n_t) = E + sum_{i=1..n_p} a_i (1/(T n_t))^i,

fitted by weighted least squares (weights 1/sigma^2) on the points with
a <= a_max; the intercept E is the continuum estimate.  A systematic
scan over (n_p, a_max) probes fit stability, and a per-temperature
variant fits each T independently in powers of 1/n_t.

The appendix-style reference datasets ship in-repo as CSV fixtures
(``T,n_t,E,sigma_E``) with SHA-256 checksums.
"""

from __future__ import annotations

import csv
import hashlib
import importlib.resources
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import InsufficientData, SingularDesign

__all__ = ["FitDataset", "FitResult", "wls_polyfit", "systematic_scan",
           "per_temperature_fit", "load_fixture", "fixture_names",
           "write_report_csv"]


@dataclass(frozen=True)
class FitDataset:
    """Energy records (T, n_t, E, sigma_E) from a chain run or a table."""

    temperature: np.ndarray
    n_t: np.ndarray
    energy: np.ndarray
    sigma: np.ndarray
    provenance: str = "own-run"     # "own-run" | "bundled-reference"

    def __post_init__(self) -> None:
        if not (self.temperature.shape == self.n_t.shape
                == self.energy.shape == self.sigma.shape):
            raise ValueError("dataset columns must have equal length")
        if np.any(self.sigma <= 0.0):
            raise ValueError("sigma_E must be positive")
        pairs = set(zip(self.temperature.tolist(), self.n_t.tolist()))
        if len(pairs) != self.temperature.size:
            raise ValueError("(T, n_t) pairs must be unique")

    @property
    def spacing(self) -> np.ndarray:
        return 1.0 / (self.temperature * self.n_t)

    def __len__(self) -> int:
        return int(self.temperature.size)

    @staticmethod
    def from_records(records: Iterable[tuple[float, int, float, float]],
                     provenance: str = "own-run") -> "FitDataset":
        rows = list(records)
        return FitDataset(
            temperature=np.array([r[0] for r in rows], dtype=float),
            n_t=np.array([r[1] for r in rows], dtype=float),
            energy=np.array([r[2] for r in rows], dtype=float),
            sigma=np.array([r[3] for r in rows], dtype=float),
            provenance=provenance)


@dataclass(frozen=True)
class FitResult:
    """Continuum estimate with its WLS error and fit diagnostics."""

    energy: float
    sigma: float
    coefficients: tuple[float, ...]
    chi2_dof: float
    n_points: int
    a_max: float
    n_p: int


def _wls(x: np.ndarray, y: np.ndarray, sigma: np.ndarray,
         n_p: int) -> tuple[np.ndarray, np.ndarray, float]:
    """Solve the weighted normal equations for a degree-n_p polynomial."""
    design = np.vander(x, n_p + 1, increasing=True)
    w = 1.0 / sigma**2
    ata = design.T @ (w[:, None] * design)
    atb = design.T @ (w * y)
    try:
        cov = np.linalg.inv(ata)
    except np.linalg.LinAlgError as exc:
        raise SingularDesign(str(exc)) from exc
    cond = np.linalg.cond(ata)
    if not np.isfinite(cond) or cond > 1e14:
        raise SingularDesign(f"normal equations condition number {cond:.3g}")
    beta = cov @ atb
    resid = y - design @ beta
    chi2 = float(resid @ (w * resid))
    return beta, cov, chi2


def wls_polyfit(data: FitDataset, n_p: int, a_max: float) -> FitResult:
    """Continuum fit E + sum a_i a^i over the points with a <= a_max."""
    a = data.spacing
    keep = a <= a_max
    n_points = int(np.count_nonzero(keep))
    if n_points < n_p + 2:
        raise InsufficientData(
            f"{n_points} points with a <= {a_max}, need >= {n_p + 2}")
    beta, cov, chi2 = _wls(a[keep], data.energy[keep], data.sigma[keep],
                           n_p)
    dof = n_points - (n_p + 1)
    return FitResult(energy=float(beta[0]),
                     sigma=float(np.sqrt(cov[0, 0])),
                     coefficients=tuple(float(b) for b in beta[1:]),
                     chi2_dof=chi2 / dof,
                     n_points=n_points, a_max=a_max, n_p=n_p)


def systematic_scan(data: FitDataset, n_p_values: Sequence[int],
                    a_max_grid: Sequence[float]
                    ) -> list[tuple[int, float, FitResult | None, str]]:
    """Fit every (n_p, a_max) cell; failed cells carry the error message."""
    if not len(a_max_grid):
        raise ValueError("a_max grid must be non-empty")
    out: list[tuple[int, float, FitResult | None, str]] = []
    for n_p in n_p_values:
        for a_max in a_max_grid:
            try:
                out.append((n_p, a_max,
                            wls_polyfit(data, n_p, a_max), ""))
            except (InsufficientData, SingularDesign) as exc:
                out.append((n_p, a_max, None, str(exc)))
    return out


def per_temperature_fit(data: FitDataset, n_p: int, n_t_cut: int
                        ) -> list[tuple[float, FitResult | None, str]]:
    """Independent fit in powers of 1/n_t for each temperature.

    Only points with n_t > n_t_cut enter; temperatures with too few
    points are reported with the error message instead of a result.
    """
    out: list[tuple[float, FitResult | None, str]] = []
    for temp in sorted(set(data.temperature.tolist()), reverse=True):
        sel = (data.temperature == temp) & (data.n_t > n_t_cut)
        n_points = int(np.count_nonzero(sel))
        if n_points < n_p + 2:
            out.append((temp, None,
                        f"{n_points} points at T={temp}, need {n_p + 2}"))
            continue
        x = 1.0 / data.n_t[sel]
        try:
            beta, cov, chi2 = _wls(x, data.energy[sel], data.sigma[sel],
                                   n_p)
        except SingularDesign as exc:
            out.append((temp, None, str(exc)))
            continue
        dof = n_points - (n_p + 1)
        out.append((temp,
                    FitResult(energy=float(beta[0]),
                              sigma=float(np.sqrt(cov[0, 0])),
                              coefficients=tuple(float(b) for b in beta[1:]),
                              chi2_dof=chi2 / dof, n_points=n_points,
                              a_max=float("inf"), n_p=n_p), ""))
    return out


# ---------------------------------------------------------------------------
# fixtures

def _data_dir():
    return importlib.resources.files("matrixqm") / "data" / "lattice"


def fixture_names() -> list[str]:
    return sorted(p.name[:-4] for p in _data_dir().iterdir()
                  if p.name.endswith(".csv"))


def load_fixture(name: str, verify_checksum: bool = True) -> FitDataset:
    """Load a shipped reference dataset, verifying its SHA-256 checksum."""
    path = _data_dir() / f"{name}.csv"
    raw = path.read_bytes()
    if verify_checksum:
        sums = (_data_dir() / "SHA256SUMS").read_text(encoding="ascii")
        expected = None
        for line in sums.splitlines():
            digest, _, fname = line.partition("  ")
            if fname.strip() == f"{name}.csv":
                expected = digest
        if expected is None:
            raise FileNotFoundError(f"no checksum recorded for {name}.csv")
        actual = hashlib.sha256(raw).hexdigest()
        if actual != expected:
            raise ValueError(
                f"checksum mismatch for {name}.csv: {actual} != {expected}")
    rows = list(csv.DictReader(raw.decode("ascii").splitlines()))
    return FitDataset.from_records(
        [(float(r["T"]), int(r["n_t"]), float(r["E"]),
          float(r["sigma_E"])) for r in rows],
        provenance="bundled-reference:" + name)


def write_report_csv(path: str,
                     cells: Sequence[tuple[int, float, FitResult | None,
                                           str]]) -> None:
    """Stability report: one row per scan cell."""
    with open(path, "w", encoding="ascii") as fh:
        fh.write("a_max,n_p,E,sigma_E,chi2_dof,n_points,error\n")
        for n_p, a_max, result, err in cells:
            if result is None:
                fh.write(f"{a_max:.9g},{n_p},,,,,{err}\n")
            else:
                fh.write(f"{a_max:.9g},{n_p},{result.energy:.9g},"
                         f"{result.sigma:.9g},{result.chi2_dof:.9g},"
                         f"{result.n_points},\n")
