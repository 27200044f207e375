import math

import numpy as np


def power(x, e):
    """``x**e`` with an integer fast path when ``e`` is integral."""
    e = float(e)
    if e.is_integer():
        return np.power(x, int(e)) if int(e) >= 0 else 1.0 / np.power(x, -int(e))
    return np.exp(e * np.log(x))


def twostar(N):
    """Critical Sobolev exponent 2N/(N-2)."""
    return 2.0 * N / (N - 2.0)


def jsonable(obj):
    """Recursively convert numpy scalars/arrays and non-finite floats for json."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isfinite(v):
            return v
        return "nan" if math.isnan(v) else ("inf" if v > 0 else "-inf")
    return obj
