import numpy as np
import pytest

from kreinqm import Grid, Involution, OperatorMatrix, StateVector

# lines appended by test_acceptance.py, echoed at the end of the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)


def random_complex(rng, *shape):
    return rng.normal(size=shape) + 1j * rng.normal(size=shape)


def random_j_hermitian(rng, J: Involution) -> np.ndarray:
    """A = J S with S exactly Hermitian, so J A^dagger J = J S J J = A."""
    M = random_complex(rng, J.dim, J.dim)
    S = 0.5 * (M + M.conj().T)
    return J.left(S)


def random_state(rng, grid: Grid) -> StateVector:
    return StateVector(grid, random_complex(rng, grid.n_points))


def as_operator(a, grid=None) -> OperatorMatrix:
    return OperatorMatrix.from_array(a, grid)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def block_J():
    return Involution.block_signature(4, 4)
