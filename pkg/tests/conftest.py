import pytest

from acceptance_log import RESULTS


def pytest_terminal_summary(terminalreporter):
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(RESULTS, key=lambda k: int(k.split()[0])):
        ok, note = RESULTS[key]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] criterion {key}: {note}")


@pytest.fixture(scope="session")
def corpus_specs():
    from catalytic.corpus import CORPUS

    return {name: entry.build(entry.default_c) for name, entry in CORPUS.items()}
