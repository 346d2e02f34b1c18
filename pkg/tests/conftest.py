import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from lead import LeadConfig, ScriptedModel, SwitchConfig  # noqa: E402
from lead.models import random_table  # noqa: E402

V = 16  # reserved specials: eot=10, vision 11-13, eos=14, pad=15
EOT = 10


def peaked(token, vocab=V, height=30.0):
    row = np.zeros(vocab)
    row[token] = height
    return row


def uniform(vocab=V):
    return np.zeros(vocab)


def two_way(a, b, vocab=V, gap=0.0):
    """High-entropy row split between tokens a and b, everything else suppressed."""
    row = np.full(vocab, -30.0)
    row[a], row[b] = gap, 0.0
    return row


def scripted(rows, vocab=V, dim=4, seed=0):
    return ScriptedModel(rows, table=random_table(vocab, dim, seed=seed))


def config(window=0, max_switches=5, **kw):
    sw = {k: kw.pop(k) for k in ("initial_mode", "initial_ref_entropy", "threshold_mode") if k in kw}
    kw.setdefault("max_answer_steps", 1)
    return LeadConfig(switch=SwitchConfig(window=window, max_switches=max_switches, **sw), **kw)


def oscillation(n_cross, vocab=V):
    """Alternating low/high entropy rows giving n_cross threshold crossings after step 1."""
    low, high = peaked(1, vocab), two_way(2, 3, vocab)
    rows = [low]
    for i in range(n_cross):
        rows.append(high if i % 2 == 0 else low)
    rows.append(peaked(EOT, vocab))
    return rows


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


ACCEPTANCE_LINES = []


@pytest.fixture
def criterion(request):
    """Record a PASS/FAIL line for an acceptance criterion, printed after the run."""
    def record(label):
        ACCEPTANCE_LINES.append((label, request.node))
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    outcomes = {}
    for rep in terminalreporter.stats.get("passed", []) + terminalreporter.stats.get("failed", []):
        if rep.when == "call":
            outcomes[rep.nodeid] = rep.outcome
    terminalreporter.section("acceptance criteria")
    for label, node in ACCEPTANCE_LINES:
        status = "PASS" if outcomes.get(node.nodeid) == "passed" else "FAIL"
        terminalreporter.write_line(f"[{status}] {label}")
