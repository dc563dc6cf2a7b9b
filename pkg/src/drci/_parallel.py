"""Worker-count resolution; DRCI_THREADS caps everything."""
from __future__ import annotations

import os


def worker_count(requested: int | None = None) -> int:
    """Number of parallel workers honoring the DRCI_THREADS environment cap."""
    available = os.cpu_count() or 1
    cap = os.environ.get("DRCI_THREADS")
    if cap is not None:
        try:
            available = min(available, max(1, int(cap)))
        except ValueError:
            pass
    if requested is None:
        return available
    return max(1, min(requested, available))
