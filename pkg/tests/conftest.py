import math
import os

# Several numba threads even on a single core, so worker-count determinism
# is actually exercised. Must happen before numba is imported.
os.environ.setdefault("NUMBA_NUM_THREADS", str(max(4, os.cpu_count() or 1)))

import pytest

from ldcapture.model import SUN_MARS, GridSpec
from ldcapture.survey import SurveyRequest, run_survey


@pytest.fixture(scope="session")
def params():
    return SUN_MARS


@pytest.fixture(scope="session")
def survey_fwd_2pi_100():
    """100x100 forward survey to 2*pi (descriptor field and labels), one worker."""
    req = SurveyRequest(GridSpec(6e-4, 100), 0.0, 0.0, 2 * math.pi)
    return req, run_survey(req, workers=1)


@pytest.fixture(scope="session")
def survey_back_pi_100():
    req = SurveyRequest(GridSpec(6e-4, 100), 0.0, -math.pi, 0.0)
    return req, run_survey(req, workers=1)
