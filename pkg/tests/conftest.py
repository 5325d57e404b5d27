import pytest

_RESULTS: list[tuple[str, bool, str]] = []


@pytest.fixture
def criterion(request):
    """Record one acceptance line; the verdict follows the test outcome."""
    entry = {"name": request.node.name, "detail": ""}

    def note(name: str, detail: str = "") -> None:
        entry["name"], entry["detail"] = name, detail

    yield note
    rep = getattr(request.node, "rep_call", None)
    _RESULTS.append((entry["name"], bool(rep and rep.passed), entry["detail"]))


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call":
        item.rep_call = rep


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in _RESULTS:
        line = f"{'PASS' if ok else 'FAIL'}  {name}"
        terminalreporter.write_line(f"{line}  ({detail})" if detail else line)
