from pathlib import Path

import numpy as np
import pytest

from hjsr import NonNegMatrix, MatrixSet

FIXTURES = Path(__file__).parent / "fixtures"


def masked_matrix(rng, n, zero_mask=0.3):
    a = rng.random((n, n))
    a[rng.random((n, n)) < zero_mask] = 0.0
    return NonNegMatrix(a)


def masked_set(rng, n, size, zero_mask=0.3):
    return MatrixSet([masked_matrix(rng, n, zero_mask) for _ in range(size)])


@pytest.fixture
def fixtures_dir():
    return FIXTURES


# one PASS/FAIL line per acceptance criterion, printed after the run so it
# lands in the saved test output
_criteria: dict = {}


def pytest_runtest_logreport(report):
    props = dict(report.user_properties)
    if "criterion" not in props:
        return
    key = props["criterion"]
    entry = _criteria.setdefault(key, {"ok": True, "detail": ""})
    if report.failed or (report.when == "call" and report.skipped):
        entry["ok"] = False
    if report.when == "call":
        entry["detail"] = props.get("detail", "")


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for key in sorted(_criteria, key=lambda k: int(k.split()[0])):
        e = _criteria[key]
        line = f"criterion {key}: {'PASS' if e['ok'] else 'FAIL'}"
        if e["detail"]:
            line += f"  ({e['detail']})"
        terminalreporter.write_line(line)
