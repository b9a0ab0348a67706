import numpy as np
import pytest

_ACCEPTANCE = []


def record_criterion(number: int, title: str, passed: bool, detail: str = "") -> None:
    _ACCEPTANCE.append((number, title, passed, detail))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, passed, detail in sorted(_ACCEPTANCE):
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"[{status}] AC{number:02d} {title}" + (f"  ({detail})" if detail else ""))


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def random_complex(rng, n, m=None):
    m = n if m is None else m
    return rng.standard_normal((n, m)) + 1j * rng.standard_normal((n, m))


def unit(i, j, n):
    e = np.zeros((n, n), dtype=complex)
    e[i - 1, j - 1] = 1
    return e


def weighted_shift(weights):
    n = len(weights) + 1
    m = np.zeros((n, n), dtype=complex)
    for k, w in enumerate(weights):
        m[k + 1, k] = w
    return m
