import numpy as np
import pytest

from elaa_detect.system import GramSystem


def random_unitary(n, rng):
    z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    q, r = np.linalg.qr(z)
    return q * (np.diagonal(r) / np.abs(np.diagonal(r)))


def random_pd(n, rng, cond=10.0, lmax=1.0):
    """Hermitian PD matrix with eigenvalues log-spaced in [lmax/cond, lmax]."""
    q = random_unitary(n, rng)
    eig = lmax * np.logspace(0, -np.log10(cond), n)
    A = (q * eig) @ q.conj().T
    return 0.5 * (A + A.conj().T)


def random_cvec(n, rng):
    return rng.standard_normal(n) + 1j * rng.standard_normal(n)


def make_system(A, b, psi=None):
    return GramSystem(np.asarray(A, dtype=complex), np.asarray(b, dtype=complex),
                      None if psi is None else np.asarray(psi, dtype=complex))


@pytest.fixture
def rng():
    return np.random.default_rng(20240501)


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "REPORT", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line[1])
