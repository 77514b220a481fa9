import socket
import threading
import time

import pytest
import uvicorn
from click.testing import CliRunner

from tempocurate.cli import main
from tempocurate.service import create_app

from tests.conftest import F1_U1_CSV, F1_U2_CSV, F2_CSV

DECIDED = "2020-05-06T10:00:00Z"


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def db_path(tmp_path):
    return str(tmp_path / "cli.db")


def invoke(runner, args, **kwargs):
    result = runner.invoke(main, args, catch_exceptions=False, **kwargs)
    return result


def write_csv(tmp_path, name, data):
    path = tmp_path / name
    path.write_bytes(data)
    return str(path)


def seed_f1(runner, tmp_path, db_path, decide=True):
    u1 = write_csv(tmp_path, "u1.csv", F1_U1_CSV)
    u2 = write_csv(tmp_path, "u2.csv", F1_U2_CSV)
    for args in (
        ["upload", "--db", db_path, "--file", u1, "--file-id", "U1",
         "--release", "2020-04-29"],
        ["upload", "--db", db_path, "--file", u2, "--file-id", "U2",
         "--release", "2020-05-06"],
    ):
        result = invoke(runner, args)
        assert result.exit_code == 0, result.output
    if decide:
        accepted = invoke(runner, [
            "accept", "--db", db_path, "--ids", "1,3,4",
            "--effective", "2020-05-06", "--decided-at", DECIDED,
        ])
        assert accepted.exit_code == 0, accepted.output
        rejected = invoke(runner, [
            "reject", "--db", db_path, "--ids", "2", "--decided-at", DECIDED,
        ])
        assert rejected.exit_code == 0, rejected.output


def test_init_creates_database(runner, db_path):
    result = invoke(runner, ["init", "--db", db_path])
    assert result.exit_code == 0
    assert result.output.strip() == "initialized"


def test_upload_summary_line(runner, tmp_path, db_path):
    u1 = write_csv(tmp_path, "u1.csv", F1_U1_CSV)
    result = invoke(runner, [
        "upload", "--db", db_path, "--file", u1, "--file-id", "U1",
        "--release", "2020-04-29",
    ])
    assert result.exit_code == 0
    assert result.output.strip() == "5 new cells, 0 proposals"


def test_upload_reads_stdin(runner, db_path):
    result = invoke(runner, [
        "upload", "--db", db_path, "--file", "-", "--file-id", "U1",
        "--release", "2020-04-29",
    ], input=F1_U1_CSV)
    assert result.exit_code == 0
    assert "5 new cells" in result.output


def test_upload_prints_consistency_warnings(runner, tmp_path, db_path):
    f2 = write_csv(tmp_path, "f2.csv", F2_CSV)
    result = invoke(runner, [
        "upload", "--db", db_path, "--file", f2, "--file-id", "F2",
        "--release", "2020-05-06",
    ])
    assert result.exit_code == 0
    assert "3 new cells, 0 proposals" in result.output
    assert "consistency: 2020-04-20 Sex total 28 != sum 29" in result.output


def test_database_from_environment(runner, tmp_path, db_path):
    u1 = write_csv(tmp_path, "u1.csv", F1_U1_CSV)
    result = invoke(runner, [
        "upload", "--file", u1, "--file-id", "U1", "--release", "2020-04-29",
    ], env={"TEMPOCURATE_DB": db_path})
    assert result.exit_code == 0
    listed = invoke(runner, ["uploads"], env={"TEMPOCURATE_DB": db_path})
    assert "U1 released 2020-04-29 (5 rows)" in listed.output


def test_pending_grouped_by_week(runner, tmp_path, db_path):
    seed_f1(runner, tmp_path, db_path, decide=False)
    result = invoke(runner, ["pending", "--db", db_path])
    assert result.exit_code == 0
    lines = result.output.splitlines()
    assert lines[0] == "week 2020-04-20"
    assert "  [1] HealthBoard/Lothian: 8 -> 9 (U1 -> U2)" in lines
    assert "  [3] Sex/Female: 12 -> 14 (U1 -> U2)" in lines


def test_accept_reject_and_empty_pending(runner, tmp_path, db_path):
    seed_f1(runner, tmp_path, db_path)
    result = invoke(runner, ["pending", "--db", db_path])
    assert result.output.strip() == "no pending updates"


def test_history_rendering(runner, tmp_path, db_path):
    seed_f1(runner, tmp_path, db_path)
    result = invoke(runner, [
        "history", "--db", db_path, "--cell", "2020-04-20/Sex/Female",
    ])
    assert result.exit_code == 0
    assert result.output.splitlines() == [
        "2020-04-20/Sex/Female",
        "  [2020-04-29, 2020-05-06) count 12 file U1",
        "  [2020-05-06, forever) count 14 file U2",
    ]


def test_snapshot_rendering(runner, tmp_path, db_path):
    seed_f1(runner, tmp_path, db_path)
    result = invoke(runner, ["snapshot", "--db", db_path, "--asof", "2020-05-07"])
    assert "2020-04-20 Sex/Female 14 U2" in result.output
    assert "2020-04-20 LocalAuthority/Edinburgh 6 U1" in result.output
    early = invoke(runner, ["snapshot", "--db", db_path, "--asof", "2019-01-01"])
    assert early.output.strip() == "no data as of 2019-01-01"


def test_query_commands_text_output(runner, tmp_path, db_path):
    seed_f1(runner, tmp_path, db_path)
    cell = "2020-04-20/Sex/Female"
    first = invoke(runner, ["query", "first", "--db", db_path, "--cell", cell])
    assert first.output.strip() == "count 12 file U1 since 2020-04-29"
    current = invoke(runner, [
        "query", "current", "--db", db_path, "--cell", cell, "--asof", "2020-05-07",
    ])
    assert current.output.strip() == "count 14 file U2 asof 2020-05-07"
    ranged = invoke(runner, ["query", "range", "--db", db_path, "--cell", cell])
    assert ranged.output.strip() == "min 12 max 14 versions 2"
    rejected = invoke(runner, ["query", "rejected", "--db", db_path])
    assert rejected.output.splitlines() == [
        "[2] 2020-04-20 LocalAuthority/Edinburgh: 6 -> 7 (U1 -> U2)"
        f" rejected at {DECIDED}",
    ]
    counts = invoke(runner, ["query", "counts", "--db", db_path, "--dimension", "Sex"])
    assert counts.output.splitlines() == ["Female 1", "Male 0"]
    top = invoke(runner, ["query", "most-updated", "--db", db_path, "--dimension", "Sex"])
    assert top.output.strip() == "Female 1"
    quiet = invoke(runner, [
        "query", "most-updated", "--db", db_path, "--dimension", "Age",
    ])
    assert quiet.output.strip() == "no updates"


def test_usage_errors_exit_2(runner, tmp_path, db_path):
    u1 = write_csv(tmp_path, "u1.csv", F1_U1_CSV)
    no_mode = invoke(runner, ["pending"])
    assert no_mode.exit_code == 2
    assert "pass --db/--url or set TEMPOCURATE_DB" in no_mode.stderr
    both = invoke(runner, [
        "pending", "--db", db_path, "--url", "http://localhost:1",
    ])
    assert both.exit_code == 2
    bad_cell = invoke(runner, ["history", "--db", db_path, "--cell", "Sex/Female"])
    assert bad_cell.exit_code == 2
    bad_ids = invoke(runner, ["accept", "--db", db_path, "--ids", "one,two"])
    assert bad_ids.exit_code == 2
    bad_window = invoke(runner, [
        "query", "counts", "--db", db_path, "--dimension", "Sex",
        "--from", "2020-06-01", "--to", "2020-05-01",
    ])
    assert bad_window.exit_code == 2
    bad_release = invoke(runner, [
        "upload", "--db", db_path, "--file", u1, "--file-id", "U1",
        "--release", "April 29",
    ])
    assert bad_release.exit_code == 2
    remote_init = invoke(runner, ["init", "--url", "http://localhost:1"])
    assert remote_init.exit_code == 2


def test_domain_errors_exit_1(runner, tmp_path, db_path):
    seed_f1(runner, tmp_path, db_path)
    missing = invoke(runner, [
        "history", "--db", db_path, "--cell", "2020-04-20/Age/85+",
    ])
    assert missing.exit_code == 1
    assert missing.stderr.startswith("error [unknown_cell]:")
    assert missing.stdout == ""
    redecide = invoke(runner, [
        "accept", "--db", db_path, "--ids", "2", "--decided-at", DECIDED,
    ])
    assert redecide.exit_code == 1
    assert redecide.stderr.startswith("error [not_pending]:")
    undefined = invoke(runner, [
        "query", "correlation", "--db", db_path,
        "--a", "Sex/Female", "--b", "Sex/Male",
    ])
    assert undefined.exit_code == 1
    assert undefined.stderr.startswith("error [undefined_correlation]:")
    unreachable = invoke(runner, ["uploads", "--url", "http://127.0.0.1:9/"])
    assert unreachable.exit_code == 1
    assert unreachable.stderr.startswith("error [connection]:")


def test_json_flag_emits_wire_shape(runner, tmp_path, db_path):
    import json

    seed_f1(runner, tmp_path, db_path)
    result = invoke(runner, [
        "history", "--db", db_path, "--cell", "2020-04-20/Sex/Female", "--json",
    ])
    payload = json.loads(result.output)
    assert payload["versions"][1]["valid_to"] == "9999-12-31"


@pytest.fixture
def live_server(tmp_path):
    """A real HTTP server over its own database file, for remote-mode tests."""
    served_db = str(tmp_path / "served.db")
    app = create_app(served_db, test_mode=True)
    config = uvicorn.Config(app, host="127.0.0.1", port=0, log_level="error")
    server = uvicorn.Server(config)
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    deadline = time.time() + 10
    while not server.started:
        assert time.time() < deadline, "server failed to start"
        time.sleep(0.01)
    port = server.servers[0].sockets[0].getsockname()[1]
    yield f"http://127.0.0.1:{port}"
    server.should_exit = True
    thread.join(timeout=5)
    app.state.db.close()


READ_COMMANDS = [
    ["uploads"],
    ["pending"],
    ["history", "--cell", "2020-04-20/Sex/Female"],
    ["history", "--cell", "2020-04-20/LocalAuthority/Edinburgh"],
    ["snapshot", "--asof", "2020-05-07"],
    ["snapshot", "--asof", "2020-04-30"],
    ["query", "first", "--cell", "2020-04-20/Sex/Female"],
    ["query", "current", "--cell", "2020-04-20/Sex/Female", "--asof", "2020-05-07"],
    ["query", "range", "--cell", "2020-04-20/Sex/Female"],
    ["query", "rejected"],
    ["query", "rejected", "--dimension", "LocalAuthority"],
    ["query", "counts", "--dimension", "Sex"],
    ["query", "counts", "--dimension", "Sex", "--subcategory", "Female",
     "--from", "2020-05-01", "--to", "2020-06-01"],
    ["query", "most-updated", "--dimension", "HealthBoard"],
    ["query", "most-updated", "--dimension", "Age"],
]


def test_direct_and_remote_json_output_match(runner, tmp_path, db_path, live_server):
    """The same command sequence against a file and against a service
    produces byte-identical --json output for every read command."""
    u1 = write_csv(tmp_path, "u1.csv", F1_U1_CSV)
    u2 = write_csv(tmp_path, "u2.csv", F1_U2_CSV)
    for mode in (["--db", db_path], ["--url", live_server]):
        for args in (
            ["upload", "--file", u1, "--file-id", "U1", "--release", "2020-04-29"],
            ["upload", "--file", u2, "--file-id", "U2", "--release", "2020-05-06"],
            ["accept", "--ids", "1,3,4", "--effective", "2020-05-06",
             "--decided-at", DECIDED],
            ["reject", "--ids", "2", "--decided-at", DECIDED],
        ):
            result = invoke(runner, args[:1] + mode + args[1:])
            assert result.exit_code == 0, result.output

    for args in READ_COMMANDS:
        direct = invoke(runner, args + ["--db", db_path, "--json"])
        remote = invoke(runner, args + ["--url", live_server, "--json"])
        assert direct.exit_code == 0 and remote.exit_code == 0
        assert direct.output == remote.output, f"divergence on {' '.join(args)}"
        plain_direct = invoke(runner, args + ["--db", db_path])
        plain_remote = invoke(runner, args + ["--url", live_server])
        assert plain_direct.output == plain_remote.output


def test_remote_upload_and_domain_error(runner, tmp_path, live_server):
    u1 = write_csv(tmp_path, "u1.csv", F1_U1_CSV)
    result = invoke(runner, [
        "upload", "--url", live_server, "--file", u1, "--file-id", "U1",
        "--release", "2020-04-29",
    ])
    assert result.exit_code == 0
    assert result.output.strip() == "5 new cells, 0 proposals"
    conflict = invoke(runner, [
        "upload", "--url", live_server, "--file", u1, "--file-id", "U1",
        "--release", "2020-04-30",
    ])
    assert conflict.exit_code == 1
    assert conflict.stderr.startswith("error [duplicate_upload]:")


def test_serve_fails_fast_when_port_is_taken(runner, db_path):
    blocker = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    blocker.bind(("127.0.0.1", 0))
    blocker.listen(1)
    port = blocker.getsockname()[1]
    try:
        result = invoke(runner, [
            "serve", "--db", db_path, "--port", str(port),
        ])
        assert result.exit_code == 1
        assert result.stderr.startswith("error [serve]:")
    finally:
        blocker.close()
