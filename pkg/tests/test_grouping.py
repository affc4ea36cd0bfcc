import numpy as np
import pytest

from survuq.grouping import partition_by_rank
from survuq.similarity import PatientSimilarity


def _ranked(losses):
    order = sorted(range(len(losses)), key=lambda i: (losses[i], f"p{i:04d}"))
    return [
        PatientSimilarity(
            patient_id=f"p{i:04d}",
            l_nomogram=losses[i],
            l_entry=0,
            l_patient=losses[i],
            psr=r,
        )
        for r, i in enumerate(order, start=1)
    ]


class TestPartitionByRank:
    def test_even_split(self):
        groups = partition_by_rank(_ranked(list(range(10))), 2)
        assert [len(g) for g in groups] == [5, 5]
        assert groups[0].member_ids == tuple(f"p{i:04d}" for i in range(5))

    def test_remainder_front_loaded(self):
        groups = partition_by_rank(_ranked(list(range(10))), 3)
        assert [len(g) for g in groups] == [4, 3, 3]

    def test_paper_scale_split(self):
        groups = partition_by_rank(_ranked(list(range(1000))), 10)
        assert [len(g) for g in groups] == [100] * 10

    def test_k_bounds(self):
        ranked = _ranked(list(range(4)))
        with pytest.raises(ValueError):
            partition_by_rank(ranked, 0)
        with pytest.raises(ValueError):
            partition_by_rank(ranked, 5)
        assert len(partition_by_rank(ranked, 4)) == 4
        assert len(partition_by_rank(ranked, 1)) == 1

    def test_requires_psr_order(self):
        ranked = _ranked(list(range(4)))[::-1]
        with pytest.raises(ValueError):
            partition_by_rank(ranked, 2)

    def test_partition_properties_random(self):
        rng = np.random.default_rng(5)
        for _ in range(50):
            n = int(rng.integers(2, 200))
            k = int(rng.integers(1, n + 1))
            losses = sorted(rng.uniform(0, 100, size=n).tolist())
            groups = partition_by_rank(_ranked(losses), k)
            sizes = [len(g) for g in groups]
            assert sum(sizes) == n
            assert max(sizes) - min(sizes) <= 1
            assert [g.gsr for g in groups] == list(range(1, k + 1))
            # disjoint and covering
            ids = [pid for g in groups for pid in g.member_ids]
            assert len(ids) == len(set(ids)) == n
            # contiguous psr ranges: group boundaries respect sorted order
            flat_losses = [l for g in groups for l in g.member_losses]
            assert flat_losses == sorted(flat_losses)
            # mean loss non-decreasing in gsr
            means = [g.mean_loss for g in groups]
            assert all(a <= b + 1e-12 for a, b in zip(means, means[1:]))
