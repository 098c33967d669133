from __future__ import annotations

import pytest

from qaugnet import corpus as cp
from qaugnet.classifier import TrainConfig, fit_matrix
from qaugnet.features import fit_vocabulary, transform_many

DESK_SEED = 2024

# one line per acceptance criterion, filled in by test_acceptance
ACCEPTANCE_LINES: dict[int, str] = {}


class Desk:
    """Balanced 1000/1000 synthetic corpus with a model trained on 80% of it."""

    def __init__(self) -> None:
        self.corpus = cp.build_dataset(1000, 1000, DESK_SEED)
        self.split = cp.split(self.corpus, 0.8, seed=DESK_SEED)
        train = self.split.train.records
        self.vocab = fit_vocabulary([r.text for r in train], 5000, (1, 3))
        X = transform_many([r.text for r in train], self.vocab)
        self.model = fit_matrix(X, [r.label for r in train], TrainConfig(seed=DESK_SEED),
                                vocabulary_hash=self.vocab.fingerprint())


@pytest.fixture(scope="session")
def desk() -> Desk:
    return Desk()


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
