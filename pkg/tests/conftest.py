import numpy as np
import pytest

from spaccel.archtemplate import AespaConfig
from spaccel.costmodel import ClusterConfig, Dataflow


def triple_loop_matmul(a, b):
    """Schoolbook reference product, independent of every kernel backend."""
    m, k = a.shape
    n = b.shape[1]
    out = np.zeros((m, n))
    for i in range(m):
        for j in range(n):
            acc = 0.0
            for kk in range(k):
                acc += a[i, kk] * b[kk, j]
            out[i, j] = acc
    return out


def matched_pair_count(a, b):
    """Count of (m, k, n) with both operands nonzero; the effectual MACs of
    every sparse-sparse dataflow."""
    return int(np.sum((a != 0).astype(np.int64) @ (b != 0).astype(np.int64)))


def four_cluster_config(pes=2, name="tiny"):
    """One cluster of each of the four basic kinds, ``pes`` PEs apiece."""
    kinds = (Dataflow.TPU, Dataflow.EIE, Dataflow.EXTENSOR, Dataflow.OUTERSPACE)
    clusters = tuple(ClusterConfig(k.value, k, pes) for k in kinds)
    return AespaConfig(name=name, clusters=clusters)


@pytest.fixture
def tiny_config():
    return four_cluster_config()
