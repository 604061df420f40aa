import pytest

from linlab import PoincareLinearizer, PolynomialMap

WEB_C = -0.8 + 0.157j


@pytest.fixture(scope="session")
def square_map():
    return PolynomialMap([0, 0, 1])


@pytest.fixture(scope="session")
def web_map():
    return PolynomialMap.quadratic(WEB_C)


@pytest.fixture(scope="session")
def exp_handle(square_map):
    """z^2 at x0 = 1: L(z) = e^z."""
    return PoincareLinearizer(fixed_point=1 + 0j).fit(square_map)


@pytest.fixture(scope="session")
def cosh_handle():
    """z^2 - 2 at x0 = 2: L(z) = 2 cosh(sqrt z)."""
    return PoincareLinearizer(fixed_point=2 + 0j).fit(PolynomialMap([-2, 0, 1]))


@pytest.fixture(scope="session")
def web_handle(web_map):
    return PoincareLinearizer().fit(web_map)


@pytest.fixture(scope="session")
def web_two(web_map):
    return PoincareLinearizer(scale="two").fit(web_map)


ACCEPTANCE_LINES: list = []


def record_acceptance(number: int, title: str, ok: bool, detail: str) -> None:
    line = f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {title}: {detail}"
    ACCEPTANCE_LINES.append((number, line))
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
