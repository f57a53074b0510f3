import logging
import pytest
from iwasawa_cm.logger import LEVELS, parse_level, setup_logger
from io import StringIO
import sys

@pytest.fixture
def capture_logs():
    """Fixture to capture log output"""
    string_io = StringIO()
    handler = logging.StreamHandler(string_io)
    handler.setFormatter(logging.Formatter('%(levelname)s - %(message)s'))

    previous_handlers = []

    def _capture_logs(logger_name="iwasawa_cm"):
        logger = logging.getLogger(logger_name)
        previous_handlers.extend(logger.handlers)
        logger.handlers.clear()
        logger.addHandler(handler)
        return string_io

    yield _capture_logs

    logger = logging.getLogger("iwasawa_cm")
    logger.handlers.clear()
    for h in previous_handlers:
        logger.addHandler(h)

def test_default_logger():
    """Test logger with default settings"""
    logger = setup_logger()
    assert logger.name == "iwasawa_cm"
    assert logger.level == logging.INFO
    assert len(logger.handlers) == 1
    assert isinstance(logger.handlers[0], logging.StreamHandler)

def test_custom_level():
    """Test logger with custom level"""
    logger = setup_logger(name="iwasawa_cm.test_level", level="DEBUG")
    assert logger.level == logging.DEBUG

    logger = setup_logger(name="iwasawa_cm.test_level", level="warning")
    assert logger.level == logging.WARNING

def test_invalid_level():
    """Test logger with invalid level"""
    with pytest.raises(ValueError):
        setup_logger(level="LOUD")

def test_same_logger_reuse():
    """Test that getting the same logger name returns the same instance"""
    logger1 = setup_logger(name="iwasawa_cm.reuse")
    logger2 = setup_logger(name="iwasawa_cm.reuse")

    assert logger1 is logger2
    assert len(logger1.handlers) == 1

def test_fresh_logger_writes_to_stdout():
    """Test that a new logger starts on stdout"""
    logger = setup_logger(name="iwasawa_cm.fresh_stdout")
    assert logger.handlers[0].stream is sys.stdout

def test_stream_argument():
    """Test that passing a stream moves the existing handler so JSON output stays clean"""
    logger = setup_logger(name="iwasawa_cm.redirect")
    assert logger.handlers[0].stream is sys.stdout

    setup_logger(name="iwasawa_cm.redirect", stream=sys.stderr)
    assert len(logger.handlers) == 1
    assert logger.handlers[0].stream is sys.stderr

    # without a stream the handler stays where it is
    setup_logger(name="iwasawa_cm.redirect", level="DEBUG")
    assert logger.handlers[0].stream is sys.stderr

def test_new_logger_on_given_stream():
    """Test that a new logger can start on a custom stream"""
    buffer = StringIO()
    logger = setup_logger(name="iwasawa_cm.buffered", stream=buffer)
    logger.info("hcp cached")
    assert "iwasawa_cm.buffered - INFO - hcp cached" in buffer.getvalue()

def test_parse_level():
    """Test level name parsing"""
    assert parse_level("debug") == logging.DEBUG
    assert parse_level("CRITICAL") == logging.CRITICAL
    assert len(LEVELS) == 5
    with pytest.raises(ValueError, match="Must be one of"):
        parse_level("verbose")

def test_log_filtering(capture_logs):
    """Test that log level filtering works"""
    output = capture_logs()
    logger = setup_logger(level="WARNING")

    logger.info("class group computed")
    logger.warning("row 431 undetermined")

    logs = output.getvalue().strip().split('\n')
    assert len(logs) == 1
    assert "WARNING - row 431 undetermined" in logs[0]
    setup_logger(level="INFO")

def test_handler_formatter():
    """Test that log formatter is properly configured"""
    logger = setup_logger(name="iwasawa_cm.formatter")
    formatter = logger.handlers[0].formatter

    assert "%(asctime)s" in formatter._fmt
    assert "%(name)s" in formatter._fmt
    assert "%(levelname)s" in formatter._fmt
    assert formatter.datefmt == "%Y-%m-%d %H:%M:%S"
