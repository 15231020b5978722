import logging
import shutil
import tempfile
from pathlib import Path

from dotenv import load_dotenv

from setup.create_reference_scenarios import set_reference_scenarios

load_dotenv()

# Skip test setup and teardown for development purposes
SKIP_TEST_SETUP = False
SKIP_TEST_TEARDOWN = False


# NOTE: the scenario documents are regenerated into a scratch directory for every run so the
#       shipped configs/ stay untouched by CLI output
def before_all(context):
    logging.basicConfig(level=logging.WARNING, format="%(levelname)-9s | %(name)s | %(message)s")

    # Load thresholds from -D overrides or defaults
    context.config.userdata.setdefault('IDENTITY_TOL', '1e-10')
    context.config.userdata.setdefault('MASS_TOL', '1e-6')
    context.config.userdata.setdefault('PAYOFF_TOL', '1e-4')
    context.config.userdata.setdefault('SPECTRAL_TOL', '1e-8')
    context.config.userdata.setdefault('RANDOM_NETWORKS', '50')
    context.config.userdata.setdefault('PARAMETER_DRAWS', '50')

    context.workdir = Path(tempfile.mkdtemp(prefix="netharvest-"))
    if SKIP_TEST_SETUP:
        print("Skipping test setup")
        context.scenario_files = {}
        return
    context.scenario_files = set_reference_scenarios(context.workdir / "configs")


def before_scenario(context, scenario):
    context.failures = []


def after_all(context):
    if SKIP_TEST_TEARDOWN:
        print(f"Skipping test teardown, leaving {context.workdir}")
        return
    shutil.rmtree(context.workdir, ignore_errors=True)
