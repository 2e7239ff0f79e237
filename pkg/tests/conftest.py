import re
import sys

import pytest

from progeng.codes import build_permutation_code, build_rs_code, rotation63_code


@pytest.fixture(scope="session")
def rot63():
    return rotation63_code()


@pytest.fixture(scope="session")
def perm42():
    return build_permutation_code(4, 2)


@pytest.fixture(scope="session")
def perm52():
    return build_permutation_code(5, 2)


@pytest.fixture(scope="session")
def perm63():
    return build_permutation_code(6, 3)


@pytest.fixture(scope="session")
def perm103():
    return build_permutation_code(10, 3)


@pytest.fixture(scope="session")
def rs63():
    return build_rs_code(6, 3, 4)


_CRIT = re.compile(r"test_acceptance\.py::test_criterion_(\d+)")


def pytest_terminal_summary(terminalreporter):
    """One PASS/FAIL line per acceptance criterion."""
    outcome = {}
    for key in ("passed", "failed", "error", "skipped"):
        for rep in terminalreporter.stats.get(key, []):
            m = _CRIT.search(getattr(rep, "nodeid", ""))
            if m is None or getattr(rep, "when", "call") not in ("call", "setup"):
                continue
            n = int(m.group(1))
            ok = key == "passed"
            outcome[n] = outcome.get(n, True) and ok
    if not outcome:
        return
    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    details = getattr(mod, "DETAILS", {})
    terminalreporter.section("acceptance criteria")
    for n in sorted(outcome):
        line = f"criterion {n}: {'PASS' if outcome[n] else 'FAIL'}"
        if n in details:
            line += f"  {details[n]}"
        terminalreporter.write_line(line)
