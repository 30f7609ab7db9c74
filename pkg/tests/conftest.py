import pytest
from hypothesis import HealthCheck, settings, strategies as st

from hca.dynamics import CaState
from hca.exact import build_hamiltonian

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

SIGMA_X = ([[0, 1], [1, 0]], [[0, 0], [0, 0]])
SIGMA_Y = ([[0, 0], [0, 0]], [[0, 1], [-1, 0]])


@pytest.fixture
def sigma_x():
    return build_hamiltonian(*SIGMA_X)


@pytest.fixture
def period4_pair():
    # psi_0 = (1, 1), psi_1 = (-i, -i)
    return CaState(0, (1, 1), (0, 0)), CaState(1, (0, 0), (-1, -1))


@pytest.fixture
def generic_pair():
    # psi_0 = (1, 0), psi_1 = (0, 1)
    return CaState(0, (1, 0), (0, 0)), CaState(1, (0, 1), (0, 0))


@st.composite
def specs(draw, max_dim=4, bound=3):
    n = draw(st.integers(1, max_dim))
    entry = st.integers(-bound, bound)
    S = [[0] * n for _ in range(n)]
    A = [[0] * n for _ in range(n)]
    for i in range(n):
        for j in range(i, n):
            S[i][j] = S[j][i] = draw(entry)
            if i != j:
                a = draw(entry)
                A[i][j], A[j][i] = a, -a
    return build_hamiltonian(S, A)


@st.composite
def spec_and_pair(draw, max_dim=4, bound=3):
    spec = draw(specs(max_dim, bound))
    vec = st.tuples(*[st.integers(-bound, bound)] * spec.dim)
    scal = st.integers(-bound, bound)
    pair = (CaState(0, draw(vec), draw(vec), draw(scal), draw(scal)),
            CaState(1, draw(vec), draw(vec), draw(scal), draw(scal)))
    return spec, pair


# acceptance lines collected by tests/test_acceptance.py
ACCEPTANCE: dict[str, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: int(k.split()[0])):
        terminalreporter.write_line(ACCEPTANCE[key])
