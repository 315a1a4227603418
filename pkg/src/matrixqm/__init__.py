"""matrixqm: cross-method low-energy spectra of SU(N) matrix quantum mechanics.

Four independent pipelines — truncated-Hamiltonian exact diagonalization,
statevector VQE emulation, lattice Hybrid Monte Carlo with continuum
extrapolation, and autoregressive-ansatz variational Monte Carlo — plus a
cross-method comparison report.
"""

__version__ = "0.1.0"
