import logging

from curvforge.logging_config import ColouredFormatter, LogColours, resolve_level, setup_logging


def test_resolve_level_precedence(monkeypatch):
    """Test explicit level, then env var, then INFO"""
    monkeypatch.setenv("CURVFORGE_LOG_LEVEL", "warning")
    assert resolve_level("debug") == logging.DEBUG
    assert resolve_level() == logging.WARNING

    monkeypatch.delenv("CURVFORGE_LOG_LEVEL")
    assert resolve_level() == logging.INFO
    assert resolve_level("nonsense") == logging.INFO

def test_setup_logging_single_handler():
    """Test that repeated setup leaves exactly one handler on the root logger"""
    setup_logging("INFO", use_colours=False)
    setup_logging("DEBUG", use_colours=False)
    root = logging.getLogger()
    assert len(root.handlers) == 1
    assert root.level == logging.DEBUG
    assert logging.getLogger("PIL").level == logging.WARNING

def test_coloured_formatter_restores_levelname():
    """Test that colouring does not leak into the record"""
    record = logging.LogRecord("curvforge", logging.ERROR, __file__, 1, "boom", None, None)
    text = ColouredFormatter(fmt="%(levelname)s %(message)s").format(record)
    assert text.startswith(LogColours.RED)
    assert record.levelname == "ERROR"
