import pytest

_CRITERIA: dict[str, str] = {}


class CriterionLog:
    """Collects one verdict line per acceptance criterion."""

    def record(self, key: str, verdict: str, detail: str) -> None:
        line = f"criterion {key}: {verdict} - {detail}"
        _CRITERIA[key] = line
        print(line)

    def check(self, key: str, ok: bool, detail: str) -> None:
        self.record(key, "PASS" if ok else "FAIL", detail)
        assert ok, detail

    def blocked(self, key: str, detail: str) -> None:
        self.record(key, "BLOCKED", detail)
        pytest.skip(detail)


@pytest.fixture(scope="session")
def criteria():
    return CriterionLog()


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_CRITERIA, key=lambda k: (int(k.rstrip("ab")), k)):
        terminalreporter.write_line(_CRITERIA[key])
