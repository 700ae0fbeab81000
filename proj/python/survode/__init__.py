"""Latent-ODE competing-risks survival toolkit.

Thin convenience layer over the compiled `_survode` extension: config
dictionaries are serialized to JSON before crossing into C++.
"""

import json as _json

from _survode import (  # noqa: F401
    CsvParseError,
    Dataset,
    DimensionError,
    Model,
    NumericalError,
    ValidationError,
    __version__,
    aalen_johansen,
    drop_measurements,
    event_time_percentiles,
    ingest_csv,
    kmeans,
    latent_summary,
    load_checkpoint,
    rmft,
    save_checkpoint,
    split,
    td_auc,
    td_brier,
)
import _survode as _core


def simulate(config):
    """Generate a synthetic dataset; `config` is a dict (see README)."""
    return _core.simulate(_json.dumps(config))


def train(train_set, valid_set, config):
    """Fit a model; `config` is a dict of training hyperparameters."""
    return _core.train(train_set, valid_set, _json.dumps(config))


def predict(model, dataset, t_m=None):
    """Per-subject survival curves {S, F} at bins 0..t_m."""
    if t_m is None:
        t_m = _json.loads(model.config_json)["t_m"]
    return _core.predict(model, dataset, t_m)


__all__ = [
    "CsvParseError",
    "Dataset",
    "DimensionError",
    "Model",
    "NumericalError",
    "ValidationError",
    "__version__",
    "aalen_johansen",
    "drop_measurements",
    "event_time_percentiles",
    "ingest_csv",
    "kmeans",
    "latent_summary",
    "load_checkpoint",
    "predict",
    "rmft",
    "save_checkpoint",
    "simulate",
    "split",
    "td_auc",
    "td_brier",
    "train",
]
