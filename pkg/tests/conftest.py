import math
import os

import pytest
from hypothesis import settings

from odtexpand.protocols import ExpansionTask
from odtexpand.trap_model import AtomSpecies, BeamGeometry

settings.register_profile("default", deadline=None, max_examples=40)
settings.register_profile("ci", deadline=None, max_examples=15)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

F0 = 2500.0
LASER = 1.06e-6


def make_task(tf_s=1e-3, waist=3e-6, ffz=250.0, f0z=F0):
    return ExpansionTask(2 * math.pi * f0z, 2 * math.pi * ffz, tf_s, AtomSpecies(), BeamGeometry(waist, LASER))


@pytest.fixture
def task_si():
    return make_task()


@pytest.fixture
def task_trap():
    return make_task().dimensionless()


VERDICTS = []


@pytest.fixture
def verdict(capsys):
    """Record and print one pass/fail line per acceptance criterion."""
    def record(label, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'} criterion {label}: {detail}"
        VERDICTS.append(line)
        with capsys.disabled():
            print("\n" + line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in VERDICTS:
            terminalreporter.write_line(line)
