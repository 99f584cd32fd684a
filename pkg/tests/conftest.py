import pytest

from esn_affect import data_io


@pytest.fixture(scope="session")
def small_corpus():
    return data_io.generate_synthetic_corpus(24, (20, 40), seed=7)


@pytest.fixture
def corpus_dir(tmp_path, small_corpus):
    series, labels = small_corpus
    feat, lab = data_io.write_corpus(series, labels, tmp_path / "corpus")
    return feat, lab


_ACCEPTANCE_KEY = pytest.StashKey[list]()


@pytest.fixture
def acceptance(request):
    """Record one pass/fail line per acceptance criterion for the terminal summary."""
    lines = request.config.stash.setdefault(_ACCEPTANCE_KEY, [])

    def record(name, ok, detail):
        lines.append(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
        return ok

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
