# Import fixtures so they're available to all tests
from tests.utils import (  # noqa: F401
    friction,
    grid,
    make_config,
    sources,
    testing_labcfg,
    thermo,
)
