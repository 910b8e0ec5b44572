"""Silence transformers' progress bars and load reports.

The server shares its stderr with callers and the trainers are used inside
test harnesses, so informational chatter is suppressed globally on import.
"""

from transformers.utils import logging as hf_logging

hf_logging.set_verbosity_error()
hf_logging.disable_progress_bar()
