import pytest


@pytest.fixture
def report(request):
    """Write a result line straight to the terminal, bypassing capture."""
    capman = request.config.pluginmanager.getplugin("capturemanager")

    def emit(line: str) -> None:
        with capman.global_and_fixture_disabled():
            print("\n" + line, flush=True)

    return emit
