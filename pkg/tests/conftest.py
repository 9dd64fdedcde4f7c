import re

import numpy as np
import pytest

from singable.model import Direction, NGramToyModel, Vocabulary
from singable.phonology import load_profile
from singable.prompts import ConstraintSet


@pytest.fixture(scope="session")
def mandarin():
    return load_profile("mandarin")


@pytest.fixture(scope="session")
def english():
    return load_profile("english")


@pytest.fixture(scope="session")
def oracle():
    return load_profile("oracle")


def random_toy_model(rng, direction=Direction.NORMAL, max_content=7, order=None, view=None):
    """A small n-gram model trained on random sequences over a random vocabulary."""
    n_content = int(rng.integers(2, max_content + 1))
    content = [f"w{i}" for i in range(n_content)]
    syllables = [int(s) for s in rng.integers(1, 3, size=n_content)]
    rhymes = [int(r) for r in rng.integers(1, 4, size=n_content)]
    vocab = Vocabulary(content, syllables, rhymes, joiner=" ")
    model = NGramToyModel(
        vocab,
        order=int(order if order is not None else rng.integers(1, 4)),
        alpha=float(rng.choice([0.01, 0.1, 0.5, 1.0])),
        direction=direction,
        prompt_view=view if view is not None else str(rng.choice(["aligned", "full", "none"])),
    )
    for _ in range(int(rng.integers(5, 40))):
        n = int(rng.integers(1, 5))
        ids = [vocab.first_content_id + int(i) for i in rng.integers(0, n_content, size=n)]
        length = int(sum(vocab.syllables[i] for i in ids))
        model.observe(("src",), ids, random_constraints(rng, length))
    return model


def random_constraints(rng, length, max_rhyme=3):
    length = max(1, min(length, 20))
    bits = [int(b) for b in rng.integers(0, 2, size=length)]
    bits[-1] = 0
    return ConstraintSet(length, int(rng.integers(0, max_rhyme + 1)), tuple(bits))


# acceptance summary ---------------------------------------------------------

_CRITERION = re.compile(r"test_criterion_(\d+)_(\w+)")
_OUTCOMES: dict = {}
_NOTES: dict = {}


@pytest.fixture
def measured(request):
    """Record the measured values of an acceptance criterion for the summary."""
    key = _CRITERION.search(request.node.name).group(1)
    return lambda text: _NOTES.__setitem__(int(key), text)


def pytest_runtest_logreport(report):
    m = _CRITERION.search(report.nodeid)
    if not m:
        return
    key = (int(m.group(1)), m.group(2))
    if report.when == "call" or report.outcome != "passed":
        previous = _OUTCOMES.get(key, "PASS")
        _OUTCOMES[key] = "PASS" if report.passed and previous == "PASS" else "FAIL"


def pytest_terminal_summary(terminalreporter):
    if not _OUTCOMES:
        return
    terminalreporter.section("acceptance criteria")
    for (num, name), outcome in sorted(_OUTCOMES.items()):
        note = f"  ({_NOTES[num]})" if num in _NOTES else ""
        terminalreporter.write_line(f"criterion {num} {name.replace('_', ' ')}: {outcome}{note}")
