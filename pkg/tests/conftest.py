import sys

import pytest

from ibtrack.formats import DetectionRecord, GtRecord, TrackRecord
from ibtrack.geometry import BBox


def gt(frame, tid, box, cls=0):
    return GtRecord(frame, tid, cls, BBox(*box))


def hyp(frame, tid, box, cls=0, status="M"):
    return TrackRecord(frame, tid, cls, BBox(*box), status)


def det(frame, box, cls=0, conf=0.9):
    return DetectionRecord(frame, cls, conf, BBox(*box))


@pytest.fixture
def tmp_files(tmp_path):
    def write(name, text):
        p = tmp_path / name
        p.write_text(text, encoding="ascii", newline="\n")
        return p
    return write


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, (ok, detail) in mod.RESULTS.items():
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
