import os


def iteration_cap(default: int) -> int:
    """Iteration cap, overridden by the ``QBD_MAX_ITER`` environment variable."""
    value = os.environ.get("QBD_MAX_ITER")
    if not value:
        return default
    cap = int(value)
    if cap < 1:
        raise ValueError("QBD_MAX_ITER must be a positive integer")
    return cap
