import numpy as np
import pytest


def random_hermitian(rng, d, scale=1.0):
    x = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return scale * (x + x.conj().T) / 2


def random_density(rng, d):
    x = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    rho = x @ x.conj().T
    return rho / np.trace(rho).real


def random_channel(rng, d):
    """Hermitian ``S`` and ``SS = G o S`` with a random complex ``G`` table of positive mean real part."""
    s = random_hermitian(rng, d)
    g = rng.uniform(0.05, 1.0, size=(d, d)) + 1j * rng.normal(scale=0.5, size=(d, d))
    return s, g * s


def rel_err(a, b):
    a, b = np.asarray(a), np.asarray(b)
    return float(np.max(np.abs(a - b)) / max(np.max(np.abs(b)), 1e-300))


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


ACCEPTANCE_LINES: list[str] = []


def report(criterion, ok: bool, detail: str) -> None:
    name = f"criterion {criterion:2d}" if isinstance(criterion, int) else str(criterion)
    line = f"{name}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
