"""Graph active learning with semantic-aware influence.

The heavy lifting lives in the native ``_core`` module; this package adds a
keyword-friendly ``run`` wrapper that returns plain Python data.
"""

import json
from os import PathLike
from typing import Any, Optional, Sequence, Union

from ._core import (
    Dataset,
    DatasetError,
    NumericalError,
    accuracy,
    binary_f1_auc,
    macro_f1,
    nir,
    nir_all,
    propagation,
    synthetic,
)
from . import _core

__all__ = [
    "Dataset",
    "DatasetError",
    "NumericalError",
    "accuracy",
    "binary_f1_auc",
    "macro_f1",
    "nir",
    "nir_all",
    "propagation",
    "run",
    "synthetic",
]


def run(
    dataset: Union[Dataset, str, PathLike],
    strategies: Sequence[str] = ("sag",),
    *,
    budget: Optional[int] = None,
    runs: int = 10,
    seed: int = 0,
    lambda_: float = 0.3,
    theta: float = 0.05,
    k: int = 2,
    epsilon: float = 1e-4,
    sim: str = "cosine",
    no_semantic: bool = False,
    no_diversity: bool = False,
    no_class_balance: bool = False,
    retrain_epochs: Optional[int] = None,
    final_epochs: Optional[int] = None,
    out: Optional[Union[str, PathLike]] = None,
    parallel: int = 1,
) -> dict[str, Any]:
    """Run acquisition, final training and evaluation for each strategy.

    Returns the same document ``results.json`` holds, with each run's trace
    inlined. When ``out`` is given the usual artifacts are written there too.
    """
    if not isinstance(dataset, Dataset):
        dataset = Dataset.load(dataset)
    if isinstance(strategies, str):
        strategies = strategies.split(",")
    text = _core._run_experiment(
        dataset,
        list(strategies),
        budget,
        runs,
        seed,
        lambda_,
        theta,
        k,
        epsilon,
        sim,
        no_semantic,
        no_diversity,
        no_class_balance,
        retrain_epochs,
        final_epochs,
        out,
        parallel,
    )
    return json.loads(text)
