import contextlib

import pytest

_RESULTS = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_RESULTS] = []


@pytest.fixture
def criterion(request):
    """Context manager that records one PASS/FAIL line per acceptance criterion.

    The body should raise AssertionError on failure; ``note`` collects the
    measured values shown next to the verdict.
    """

    @contextlib.contextmanager
    def record(number, title):
        notes = []
        try:
            yield notes
        except pytest.skip.Exception as exc:
            request.config.stash[_RESULTS].append((number, "SKIP", title, str(exc.msg)))
            raise
        except BaseException as exc:
            msg = "; ".join(notes + [str(exc).splitlines()[0] if str(exc) else type(exc).__name__])
            request.config.stash[_RESULTS].append((number, "FAIL", title, msg))
            raise
        request.config.stash[_RESULTS].append((number, "PASS", title, "; ".join(notes)))

    return record


def pytest_terminal_summary(terminalreporter, config):
    results = config.stash.get(_RESULTS, [])
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number, verdict, title, detail in sorted(results, key=lambda r: r[0]):
        terminalreporter.write_line(f"criterion {number:>2} {verdict}: {title} ({detail})")
