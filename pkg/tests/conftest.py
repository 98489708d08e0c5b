import pytest

from pme_lab.elliptic_profile import solve_profile
from pme_lab.exact_solutions import BarenblattParams, PmeParams
from pme_lab.fields import BarenblattField, GiantField

# Frozen oracle values.
# Barenblatt mass: (ω/2)(C/A)^{n/2} C^{1/(m-1)} B(n/2, 1/(m-1)+1), A = λ(m-1)/(2mn).
MASS_21 = 4.618802153517006
MASS_21_C2 = 13.063945294843615
MASS_22 = 25.132741228718345
MASS_32 = 37.69911184307752
# U(0) on R = 1 from an independent DOP853 shooting (rtol 1e-13) with brentq on w(0).
GIANT_U0 = {
    (2.0, 1): 0.4482203943883785,
    (3.0, 1): 0.4818720317134129,
    (2.0, 2): 0.20856708025283446,
    (1.5, 3): 0.058847940082577446,
}
# mean of L(φ)/φ(0,0) over the default bumps at quadrature resolution 2048
DIRAC_MEAN_21 = 4.617797822076261


@pytest.fixture(scope="session")
def pme21():
    return PmeParams(2.0, 1)


@pytest.fixture(scope="session")
def barenblatt21(pme21):
    return BarenblattField(BarenblattParams(pme21))


@pytest.fixture(scope="session")
def profile21(pme21):
    return solve_profile(pme21, 1.0)


@pytest.fixture(scope="session")
def giant21(profile21):
    return GiantField(profile21, 0.0)


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
