import numpy as np
import pytest

from fracdiff.grid import Field, Grid1D

_CRITERIA: dict[int, tuple[bool, str]] = {}


def record_criterion(number: int, passed: bool, detail: str) -> None:
    _CRITERIA[number] = (bool(passed), detail)
    print(f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}")


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_CRITERIA):
        ok, detail = _CRITERIA[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture
def small_grid():
    return Grid1D(10.0, 129)


@pytest.fixture
def bump_field(small_grid):
    x = small_grid.x
    return Field(small_grid, np.maximum(1 - x ** 2, 0.0) ** 2)
