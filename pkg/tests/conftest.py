import logging

import pytest


@pytest.fixture(autouse=True)
def _reset_package_logger():
    """Drop handlers bound to a previous test's (now closed) capture streams"""
    yield
    logger = logging.getLogger("iwasawa_cm")
    for handler in list(logger.handlers):
        logger.removeHandler(handler)
