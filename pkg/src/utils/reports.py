"""
Report emission
JSON for summaries (sorted keys, no timestamps), CSV for tables via pandas.
"""

import json
import sys
from pathlib import Path
from typing import Optional, Union

import numpy as np
import pandas as pd

FLOAT_FORMAT = '%.6f'


def _default(value):
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.ndarray):
        return value.tolist()
    if hasattr(value, 'to_dict'):
        return value.to_dict()
    raise TypeError(f"cannot serialize {type(value).__name__}")


def to_json(payload) -> str:
    return json.dumps(payload, sort_keys=True, indent=2, default=_default) + '\n'


def write_json(payload, path: Optional[Union[str, Path]] = None):
    text = to_json(payload)
    if path is None or str(path) == '-':
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def to_csv(table) -> str:
    frame = table if isinstance(table, pd.DataFrame) else pd.DataFrame(table)
    return frame.to_csv(index=False, float_format=FLOAT_FORMAT, lineterminator='\n')


def write_csv(table, path: Optional[Union[str, Path]] = None):
    text = to_csv(table)
    if path is None or str(path) == '-':
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)
