"""
utils/log.py: tagged stderr logging

Lines look like the node prints of the pipeline: `[train] ✓ epoch 3 total=0.41`.
"""

from __future__ import annotations
import logging
import os
import sys

_ROOT = "avr"
_configured = False


class _TagFilter(logging.Filter):
    def filter(self, record: logging.LogRecord) -> bool:
        record.tag = record.name.rsplit(".", 1)[-1]
        return True


def _configure() -> None:
    global _configured
    if _configured:
        return
    handler = logging.StreamHandler(sys.stderr)
    handler.addFilter(_TagFilter())
    handler.setFormatter(logging.Formatter("[%(tag)s] %(message)s"))
    root = logging.getLogger(_ROOT)
    root.addHandler(handler)
    root.setLevel(os.environ.get("AVR_LOG_LEVEL", "INFO").upper())
    root.propagate = False
    _configured = True


def get_logger(tag: str) -> logging.Logger:
    _configure()
    return logging.getLogger(f"{_ROOT}.{tag}")
