"""
CSV connector for synthetic datasets.

Dump format: header ``label,f0,f1,...`` then one row per sample.
"""

import logging
from pathlib import Path
from typing import Optional, Union

import numpy as np
import pandas as pd

from core.exceptions import FormatError
from ..datasets import Dataset

logger = logging.getLogger(__name__)


def dump_dataset_csv(ds: Dataset, path: Union[str, Path]):
    """Write ``ds`` as CSV with full float precision."""
    frame = pd.DataFrame(ds.features, columns=[f"f{k}" for k in range(ds.feature_dim)])
    frame.insert(0, "label", ds.labels)
    frame.to_csv(path, index=False, float_format="%.17g", lineterminator="\n")
    logger.debug(f"Dumped {len(ds)} samples to {path}")


def load_dataset_csv(path: Union[str, Path], num_classes: Optional[int] = None) -> Dataset:
    """Read a CSV dump written by ``dump_dataset_csv``."""
    frame = pd.read_csv(path, float_precision="round_trip")
    if frame.columns.empty or frame.columns[0] != "label":
        raise FormatError(f"CSV dump {path} must start with a 'label' column")
    labels = frame["label"].to_numpy(dtype=np.int64)
    features = frame.drop(columns="label").to_numpy(dtype=np.float64)
    if num_classes is None:
        num_classes = int(labels.max()) + 1 if labels.size else 1
    return Dataset(features, labels, num_classes=num_classes)
