"""Session fixtures and the acceptance-criterion summary hook.

The heavy artifacts (profile, tuned model, 50-trial evaluation sweeps)
are computed once per session and shared by the module tests and the
acceptance suite.  All seeds here are canonical: changing them
invalidates the frozen golden values in the tests.
"""

import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from faultclip.data import make_synthetic_set
from faultclip.metrics import SweepConfig, compute_auc, run_sweep
from faultclip.model import load_model, set_thresholds, strip_thresholds
from faultclip.profiling import profile
from faultclip.tuning import TuneConfig, tune_network

FIXTURE_PATH = os.path.join(os.path.dirname(__file__), "fixtures", "lenet-fixture.ftc")

SAMPLES_SEED = 2024
FIXTURE_RATES = (0.0, 1e-5, 5e-5, 1e-4, 5e-4, 1e-3)
TUNE_SEED = 99
EVAL_SEED = 1
EVAL_TRIALS = 50


@pytest.fixture(scope="session")
def fixture_model():
    return load_model(FIXTURE_PATH)


@pytest.fixture(scope="session")
def synth_samples():
    return make_synthetic_set(seed=SAMPLES_SEED, n=512)


@pytest.fixture(scope="session")
def calibration(synth_samples):
    return synth_samples[:128]


@pytest.fixture(scope="session")
def evaluation(synth_samples):
    return synth_samples[128:384]


@pytest.fixture(scope="session")
def fixture_profile(fixture_model, calibration):
    return profile(fixture_model, calibration)


@pytest.fixture(scope="session")
def tune_config(calibration):
    return TuneConfig(
        sweep=SweepConfig(
            fault_rates=FIXTURE_RATES,
            trials_per_rate=10,
            base_seed=TUNE_SEED,
            eval_set=calibration,
        ),
        max_iters=10,
        min_iters=3,
        delta=0.01,
        fault_scope="layer",
    )


@pytest.fixture(scope="session")
def tuned_artifacts(fixture_model, fixture_profile, tune_config):
    """(tuned model, traces) from the canonical tuning run."""
    return tune_network(fixture_model, fixture_profile, tune_config, jobs=4)


@pytest.fixture(scope="session")
def final_sweeps(fixture_model, fixture_profile, tuned_artifacts, evaluation):
    """50-trial network-scope evaluation sweeps of the three model variants."""
    cfg = SweepConfig(
        fault_rates=FIXTURE_RATES,
        trials_per_rate=EVAL_TRIALS,
        scope="network",
        base_seed=EVAL_SEED,
        eval_set=evaluation,
    )
    tuned, _ = tuned_artifacts
    variants = {
        "none": strip_thresholds(fixture_model),
        "actmax": set_thresholds(fixture_model, fixture_profile.act_max),
        "tuned": tuned,
    }
    sweeps = {name: run_sweep(m, cfg, jobs=4) for name, m in variants.items()}
    aucs = {name: compute_auc(sw).auc for name, sw in sweeps.items()}
    return sweeps, aucs


# ---------------------------------------------------------------------------
# acceptance summary: one pass/fail line per criterion

_CRITERIA = {}


def pytest_runtest_logreport(report):
    if report.when != "call":
        return
    name = report.nodeid.rsplit("::", 1)[-1]
    if "test_acceptance" in report.nodeid and name.startswith("test_p"):
        crit = name.split("_")[1].upper()
        _CRITERIA[crit] = report.outcome


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for crit in sorted(_CRITERIA):
        outcome = _CRITERIA[crit]
        terminalreporter.write_line(f"{crit}: {'PASS' if outcome == 'passed' else 'FAIL'}")
