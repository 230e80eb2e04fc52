import pytest

_CRITERIA = {}


@pytest.fixture
def criterion():
    """``criterion(number, title, ok, detail)`` records a pass/fail line and asserts ``ok``."""

    def record(number: int, title: str, ok: bool, detail: str) -> None:
        _CRITERIA[number] = (title, bool(ok), detail)
        assert ok, f"criterion {number} ({title}): {detail}"

    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        title, ok, detail = _CRITERIA[number]
        terminalreporter.write_line(
            f"[{'PASS' if ok else 'FAIL'}] {number:>2}. {title}: {detail}")
    passed = sum(ok for _, ok, _ in _CRITERIA.values())
    terminalreporter.write_line(f"{passed}/{len(_CRITERIA)} criteria passed")
