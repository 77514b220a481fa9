"""Shared fixtures: the two-upload F1 story, the bad-total F2 file, and a
three-upload story (F3) that exercises re-proposal, windows, and a defined
correlation."""

from __future__ import annotations

from datetime import date, datetime, timezone

import pytest

from tempocurate.database import CurationDb

F1_U1_CSV = b"""week_start,dimension,subcategory,count
2020-04-20,Sex,Female,12
2020-04-20,Sex,Male,15
2020-04-20,Total,All,27
2020-04-20,HealthBoard,Lothian,8
2020-04-20,LocalAuthority,Edinburgh,6
"""

F1_U2_CSV = b"""week_start,dimension,subcategory,count
2020-04-20,Sex,Female,14
2020-04-20,Sex,Male,15
2020-04-20,Total,All,29
2020-04-20,HealthBoard,Lothian,9
2020-04-20,LocalAuthority,Edinburgh,7
"""

# Total disagrees with the Sex sum: reported 28, but 14 + 15 = 29.
F2_CSV = b"""week_start,dimension,subcategory,count
2020-04-20,Sex,Female,14
2020-04-20,Sex,Male,15
2020-04-20,Total,All,28
"""

F3_V1_CSV = b"""week_start,dimension,subcategory,count
2020-04-20,Sex,Female,10
2020-04-20,Sex,Male,11
2020-04-20,Total,All,21
2020-04-20,HealthBoard,Lothian,5
2020-04-20,HealthBoard,Grampian,3
2020-04-20,LocalAuthority,Edinburgh,4
2020-04-27,Sex,Female,7
2020-04-27,Sex,Male,8
2020-04-27,Total,All,15
"""

F3_V2_CSV = b"""week_start,dimension,subcategory,count
2020-04-20,Sex,Female,12
2020-04-20,Total,All,23
2020-04-20,HealthBoard,Lothian,6
2020-04-20,LocalAuthority,Edinburgh,5
2020-04-27,Sex,Male,9
2020-04-27,Total,All,16
"""

F3_V3_CSV = b"""week_start,dimension,subcategory,count
2020-04-20,HealthBoard,Lothian,7
2020-04-20,HealthBoard,Grampian,4
2020-04-20,LocalAuthority,Edinburgh,5
"""

F1_DECIDED_AT = datetime(2020, 5, 6, 10, 0, 0, tzinfo=timezone.utc)


def build_f1(db: CurationDb) -> dict:
    """Upload U1 and U2, accept all U2 changes except Edinburgh (rejected)."""
    db.upload("U1", date(2020, 4, 29), F1_U1_CSV)
    response = db.upload("U2", date(2020, 5, 6), F1_U2_CSV)
    edinburgh = [p["id"] for p in response["proposals"] if p["subcategory"] == "Edinburgh"]
    others = [p["id"] for p in response["proposals"] if p["id"] not in edinburgh]
    db.accept(others, date(2020, 5, 6), F1_DECIDED_AT)
    db.reject(edinburgh, F1_DECIDED_AT)
    return response


def build_f3(db: CurationDb) -> None:
    """Three releases: V2 mostly accepted (Edinburgh rejected), V3 re-proposes
    Edinburgh (left pending) alongside accepted board updates."""
    db.upload("V1", date(2020, 5, 6), F3_V1_CSV)
    v2 = db.upload("V2", date(2020, 5, 13), F3_V2_CSV)
    edinburgh = [p["id"] for p in v2["proposals"] if p["subcategory"] == "Edinburgh"]
    others = [p["id"] for p in v2["proposals"] if p["id"] not in edinburgh]
    t2 = datetime(2020, 5, 13, 9, 0, 0, tzinfo=timezone.utc)
    db.accept(others, date(2020, 5, 13), t2)
    db.reject(edinburgh, t2)

    v3 = db.upload("V3", date(2020, 5, 20), F3_V3_CSV)
    boards = [p["id"] for p in v3["proposals"] if p["dimension"] == "HealthBoard"]
    t3 = datetime(2020, 5, 20, 9, 0, 0, tzinfo=timezone.utc)
    db.accept(boards, date(2020, 5, 20), t3)
    # Edinburgh's re-proposal stays pending.


@pytest.fixture
def f1_db(tmp_path):
    db = CurationDb(str(tmp_path / "f1.db"))
    build_f1(db)
    yield db
    db.close()


@pytest.fixture
def f3_db(tmp_path):
    db = CurationDb(str(tmp_path / "f3.db"))
    build_f3(db)
    yield db
    db.close()


@pytest.fixture
def empty_db(tmp_path):
    db = CurationDb(str(tmp_path / "fresh.db"))
    yield db
    db.close()
