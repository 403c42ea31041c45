"""Record scaling into a larger field to widen the mask support."""

from __future__ import annotations

from typing import Sequence

from ..model import Database
from ..oracle import distance


def embed_transform(
    db: Database,
    factor: int,
    target_q: int,
    rejected: Sequence[Sequence[int]] | None = None,
) -> Database:
    """Multiply every record coordinate by ``factor``.

    Queries are left unscaled, so the servers can keep the transform to
    themselves. ``target_q`` must exceed every distance the scaled records
    can produce: the largest distance to a ``rejected`` point when those are
    given, otherwise the worst case ``(factor * R)^2 * d``.

    Raises:
        ValueError: for a non-positive factor or when ``target_q`` is too small.
    """
    if factor < 1:
        raise ValueError(f"factor must be >= 1, got {factor}")
    rows = [tuple(factor * v for v in r) for r in db.rows()]
    R = factor * db.R
    if rejected:
        bound = max(distance(x, y) for x in rejected for y in rows)
    else:
        bound = R * R * db.d
    if target_q <= bound:
        raise ValueError(f"target field q={target_q} does not exceed the distance bound {bound}")
    return Database.from_rows(rows, R)
