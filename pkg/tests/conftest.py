import contextlib

import pytest

from readseq.geometry import DisplayGeometry, compute_radii

_ACCEPTANCE: list[tuple[str, bool, str]] = []


@contextlib.contextmanager
def criterion(name: str):
    """Record a pass/fail line for the acceptance summary."""
    detail: dict = {}
    try:
        yield detail
    except BaseException as exc:
        if isinstance(exc, pytest.skip.Exception):
            _ACCEPTANCE.append((name, None, str(exc)))
        else:
            _ACCEPTANCE.append((name, False, detail.get("info", "") or type(exc).__name__))
        raise
    _ACCEPTANCE.append((name, True, detail.get("info", "")))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, info in _ACCEPTANCE:
        status = "SKIP" if ok is None else ("PASS" if ok else "FAIL")
        terminalreporter.write_line(f"{status}  {name}" + (f"  [{info}]" if info else ""))


@pytest.fixture(scope="session")
def default_radii():
    return compute_radii(DisplayGeometry())
