# Helper functions for json output and profile hashing
import hashlib
import json
from datetime import datetime, date

import numpy as np


def json_serial(obj):
    """JSON serializer for objects not serializable by default json code"""
    if isinstance(obj, (datetime, date)):
        return obj.isoformat()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, (set, frozenset)):
        return sorted(obj)
    raise TypeError(f"Type {type(obj)} not serializable")


def digest(data) -> str:
    '''sha256 of the canonical json form of data'''
    canonical = json.dumps(data, sort_keys=True, separators=(',', ':'), default=json_serial)
    return hashlib.sha256(canonical.encode('utf-8')).hexdigest()


def rounded_key(array, decimals: int = 8) -> bytes:
    '''Hashable key of an array rounded to the given decimals'''
    rounded = np.round(np.asarray(array, dtype=float), decimals) + 0.0
    return rounded.tobytes()
