"""
Reading the tracking metrics
============================

A single object tracked for ten frames, scored three ways: a perfect
tracker, one that loses the object for a frame, and one that swaps the
identity halfway through.
"""

from ibtrack.formats import GtRecord, TrackRecord
from ibtrack.geometry import BBox
from ibtrack.metrics import clear_match, id_metrics, mota, motp

truth = [GtRecord(f, 1, 0, BBox(10, 10 + 5 * f, 20, 20)) for f in range(1, 11)]


def as_tracks(ids):
    return [TrackRecord(g.frame, tid, 0, g.bbox) for g, tid in zip(truth, ids) if tid is not None]


cases = {
    "perfect": as_tracks([1] * 10),
    "one miss": as_tracks([None] + [1] * 9),
    "swap": as_tracks([1] * 5 + [2] * 5),
}
for label, hyp in cases.items():
    c = clear_match(truth, hyp)
    _, idp, idr, idf1 = id_metrics(truth, hyp)
    print(f"{label:>9}: FN {c.fn_total} FP {c.fp_total} IDs {c.idsw_total}  "
          f"MOTA {mota(c):.2f}  MOTP {motp(c):.2f}  IDF1 {idf1:.2f}")

# The swap costs one ID switch in MOTA, but IDF1 punishes it harder: only
# half of the frames can be credited to the single best identity pairing.
