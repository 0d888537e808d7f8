import os

ENV_THREADS = "SERFATI_FLOWS_THREADS"


def thread_cap() -> int:
    """Worker cap from the environment, defaulting to the CPU count."""
    raw = os.environ.get(ENV_THREADS)
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            pass
    return os.cpu_count() or 1
