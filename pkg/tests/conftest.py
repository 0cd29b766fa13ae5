import time

import numpy as np
import pytest

from qreduce.cli import PRESETS
from qreduce.hamiltonian import HamiltonianSpec, PhasePoint, PotentialModel
from qreduce.reduction import ReductionProblem, run_reduction


def corpus_spec(name: str) -> HamiltonianSpec:
    return HamiltonianSpec(mass=1.0,
                           potential=PotentialModel.polynomial(PRESETS[name]))


@pytest.fixture(scope="session")
def harmonic_cycle():
    # One full oscillator period on the reference grid, timed.
    problem = ReductionProblem(spec=corpus_spec("harmonic"),
                               alpha0=PhasePoint(1.0, 0.0),
                               T=2.0 * np.pi, epsilon=1e-6)
    start = time.perf_counter()
    report = run_reduction(problem)
    return report, time.perf_counter() - start


@pytest.fixture(scope="session")
def cubic_fixed_point():
    # Perturbed oscillator held at its fixed point; shared by the
    # Duhamel and assembled-bound checks.
    problem = ReductionProblem(spec=corpus_spec("cubic-perturbed"),
                               alpha0=PhasePoint(0.0, 0.0),
                               T=1.0, epsilon=1.0)
    return run_reduction(problem)
