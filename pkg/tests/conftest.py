import pytest

from asmflat import check, corpus


@pytest.fixture(scope="session")
def corpus_models():
    return {n: corpus.load(n) for n in corpus.names()}


@pytest.fixture(scope="session")
def corpus_typed(corpus_models):
    return {n: check(m) for n, m in corpus_models.items()}


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("tests.test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[n])
