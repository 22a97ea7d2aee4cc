import os
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

import topoattack as ta

# Converted real datasets (cora/citeseer/pubmed subdirectories in the neutral
# format).  The paper-band acceptance tests run only when this is set.
DATA_DIR = os.environ.get("TOPOATTACK_DATA", "")


def real_dataset_dir(name: str):
    if not DATA_DIR:
        return None
    path = Path(DATA_DIR) / name
    return path if (path / "manifest.json").is_file() else None


@pytest.fixture(scope="session")
def fixture_graph():
    """The calibrated synthetic benchmark graph with a seed-0 split."""
    g = ta.planted_graph(seed=0)
    masks = ta.make_splits(g, 0, train_per_class=20, val_size=100, test_size=400)
    return g.with_masks(*masks)


@pytest.fixture(scope="session")
def fixture_model(fixture_graph):
    """A naturally trained model on the fixture graph (seed 0)."""
    return ta.train_natural(fixture_graph, ta.TrainConfig(), seed=0)


@pytest.fixture(scope="session")
def tiny_graph():
    """A 10-node two-class graph that trains in milliseconds."""
    edges = [(0, 1), (1, 2), (2, 3), (3, 4), (0, 2),
             (5, 6), (6, 7), (7, 8), (8, 9), (5, 7), (2, 7)]
    features = np.zeros((10, 4))
    features[:5, :2] = 1.0
    features[5:, 2:] = 1.0
    labels = np.array([0] * 5 + [1] * 5, dtype=np.int64)
    g = ta.Graph(adjacency=ta.build_adjacency(edges, 10), features=features,
                 labels=labels, class_count=2)
    return g.with_masks(np.array([0, 1, 5, 6]), np.array([2, 7]),
                        np.array([3, 4, 8, 9]))
