"""Runtime settings shared across modules."""

from __future__ import annotations

import os

#: Environment variable capping the number of worker threads.
THREADS_ENV = "TKLAB_THREADS"


def worker_count() -> int:
    """Worker threads allowed by ``TKLAB_THREADS`` (default 1)."""
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1
