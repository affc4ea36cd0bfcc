"""Partition a similarity-ranked training set into k contiguous rank buckets.

Group 1 holds the most similar patients (lowest psr), group k the least
similar. When the cohort size is not divisible by k the remainder is
front-loaded so group sizes differ by at most one and every group is
non-empty.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .similarity import PatientSimilarity


@dataclass(frozen=True)
class PatientGroup:
    """One rank bucket: gsr is the 1-based group similarity rank."""

    gsr: int
    member_ids: tuple[str, ...]
    member_losses: tuple[float, ...]

    def __len__(self) -> int:
        return len(self.member_ids)

    @property
    def mean_loss(self) -> float:
        return sum(self.member_losses) / len(self.member_losses)


def partition_by_rank(ranked: Sequence[PatientSimilarity], k: int) -> list[PatientGroup]:
    """Split ``ranked`` (psr order) into k contiguous buckets of near-equal size."""
    n = len(ranked)
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, {n}], got {k}")
    if [e.psr for e in ranked] != list(range(1, n + 1)):
        raise ValueError("ranked entries must be in psr order 1..n")
    base, rem = divmod(n, k)
    groups: list[PatientGroup] = []
    start = 0
    for i in range(1, k + 1):
        size = base + (1 if i <= rem else 0)
        chunk = ranked[start : start + size]
        groups.append(
            PatientGroup(
                gsr=i,
                member_ids=tuple(e.patient_id for e in chunk),
                member_losses=tuple(e.l_patient for e in chunk),
            )
        )
        start += size
    return groups
