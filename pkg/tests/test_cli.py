import csv
import fcntl
import hashlib
import io
import json
import math
import os
import subprocess
import sys

import pytest

from orbicensus import cli
from orbicensus.errors import ConfigurationError


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def run_out(capsys, *argv):
    code = cli.run(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_exit_codes(capsys, tmp_path):
    assert run_out(capsys, "census2d", "--disc-max", "0")[0] == 2
    assert run_out(capsys, "nonsense")[0] == 2
    assert run_out(capsys)[0] == 2
    assert run_out(capsys, "census3d", "--field-d", "5", "--volume-max", "1")[0] == 2
    assert run_out(capsys, "census3d", "--field-d", "-4", "--volume-max", "1")[0] == 2
    assert run_out(capsys, "embeds", "--disc", "12", "--delta", "-4")[0] == 2
    assert run_out(capsys, "embeds", "--disc", "10", "--delta", "-5")[0] == 2
    assert run_out(capsys, "systole", "--disc", "2")[0] == 2
    assert run_out(capsys, "census2d", "--disc-max", "10", "--precision", "5")[0] == 2
    assert run_out(capsys, "census2d", "--disc-max", "10", "--precision", "18")[0] == 2
    assert run_out(capsys, "census2d", "--disc-max", "10", "--threads", "0")[0] == 2
    code, _, err = run_out(capsys, "fit", "--input", str(tmp_path / "missing.csv"))
    assert code == 2 and "missing.csv" in err
    # a computational failure: fit on a curve with too few points
    p = tmp_path / "short.csv"
    p.write_text("x,count,total\n10,1,2\n100,5,9\n")
    code, _, err = run_out(capsys, "fit", "--input", str(p))
    assert code == 1 and "failed" in err


def test_embeds_and_systole(capsys):
    assert run_out(capsys, "embeds", "--disc", "10", "--delta", "-4")[1].strip() == "false"
    assert run_out(capsys, "embeds", "--disc", "6", "--delta", "5")[1].strip() == "true"
    code, out, _ = run_out(capsys, "systole", "--disc", "209")
    assert code == 0 and out.strip().startswith("trace=5 field_delta=21 length=3.13359847")


def test_census2d_example(capsys, tmp_path):
    path = tmp_path / "c.csv"
    assert run_out(capsys, "census2d", "--disc-max", "15", "--with-systole", "--out", str(path))[0] == 0
    rows = read_csv(path)
    assert [r["disc_or_ideal_norms"] for r in rows] == ["6", "10", "14", "15"]
    assert all(abs(float(r["systole_length"]) - 1.924847) < 1e-6 for r in rows)
    assert all(r["cocompact"] == "true" for r in rows)
    assert tuple(rows[0]) == cli.CENSUS_COLUMNS
    assert abs(float(rows[0]["covolume"]) - 2.0943951023932) < 1e-12


def test_census2d_volumes(capsys):
    code, out, _ = run_out(capsys, "census2d", "--disc-max", "6", "--include-split")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert abs(float(rows[0]["covolume"]) - math.pi / 3) < 1e-9 and rows[0]["cocompact"] == "false"
    assert abs(float(rows[1]["covolume"]) - 2 * math.pi / 3) < 1e-9


def test_census3d_labels(capsys):
    code, out, _ = run_out(capsys, "census3d", "--field-d", "-1", "--volume-max", "1.3")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert [r["disc_or_ideal_norms"] for r in rows] == ["", "2;5", "2;5'"]
    assert [r["phi"] for r in rows] == ["1", "4", "4"]
    code, out, _ = run_out(capsys, "census3d", "--field-d", "-1", "--volume-max", "1.3", "--cocompact-only")
    assert len(list(csv.DictReader(io.StringIO(out)))) == 2


def test_empty_census_is_header_only(capsys, tmp_path):
    path = tmp_path / "e.csv"
    assert run_out(capsys, "census2d", "--disc-max", "5", "--out", str(path))[0] == 0
    assert path.read_bytes() == (",".join(cli.CENSUS_COLUMNS) + "\n").encode()
    # a warning-only 3d run also gives a header
    assert run_out(capsys, "census3d", "--field-d", "-1", "--volume-max", "0.1", "--out", str(tmp_path / "e3.csv"))[0] == 0
    assert (tmp_path / "e3.csv").read_text().count("\n") == 1


def test_manifest(capsys, tmp_path):
    path = tmp_path / "d.csv"
    argv = ["density", "phi-embeddable", "--delta", "5", "--x-min", "1e3", "--x-max", "1e5", "--points", "5", "--out", str(path)]
    assert run_out(capsys, *argv)[0] == 0
    man = json.loads(cli.manifest_path(path).read_text())
    assert man["schema"] == "orbicensus/1" and man["subcommand"] == "density-phi-embeddable"
    assert man["digests"][path.name] == hashlib.sha256(path.read_bytes()).hexdigest()
    assert man["parameters"]["delta"] == 5 and man["workers"] >= 1 and man["sieve_limit"] > 0
    text = cli.manifest_path(path).read_text()
    assert text == json.dumps(json.loads(text), sort_keys=True, indent=2) + "\n"
    rows = read_csv(path)
    assert tuple(rows[0]) == cli.DENSITY_COLUMNS and len(rows) == 5
    assert len({r["fitted_a"] for r in rows}) == 1
    # the fit subcommand reads the same file back
    code, out, _ = run_out(capsys, "fit", "--input", str(path))
    assert code == 0 and out.startswith("fitted_c=") and rows[0]["fitted_a"] in out
    # no stray temporary files
    assert sorted(p.name for p in tmp_path.iterdir()) == ["d.csv", "d.csv.manifest.json"]


def test_out_dir(capsys, tmp_path):
    argv = ["density", "short-systole", "--x0", "2", "--x-min", "100", "--x-max", "1e4", "--points", "3", "--out-dir", str(tmp_path)]
    assert run_out(capsys, *argv)[0] == 0
    assert (tmp_path / "density-short-systole.csv").exists()
    assert (tmp_path / "density-short-systole.csv.manifest.json").exists()


def test_short_systole_notice(capsys):
    code, out, err = run_out(capsys, "density", "short-systole", "--x0", "1", "--x-min", "100", "--x-max", "1000", "--points", "2")
    assert code == 0 and "notice" in err
    assert [r["count"] for r in csv.DictReader(io.StringIO(out))] == ["0", "0"]


def test_no_small_field_h_forms(capsys):
    base = ["density", "no-small-field", "--x-min", "100", "--x-max", "1e4", "--points", "3"]
    assert run_out(capsys, *base)[0] == 2
    assert run_out(capsys, *base, "--h-exp", "0.6")[0] == 2
    code, out, _ = run_out(capsys, *base, "--h-fixed", "5")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0 and rows[0]["count"] == "1" and rows[0]["total"] == "30"
    code, out, _ = run_out(capsys, *base, "--h-exp", "0.4")
    assert code == 0


def test_checks(capsys):
    code, out, _ = run_out(capsys, "checks", "fields-count", "--x", "100")
    assert code == 0 and out.startswith("count=61 ")
    code, out, _ = run_out(capsys, "checks", "silverman", "--samples", "500")
    assert code == 0 and "violations=0" in out
    code, out, _ = run_out(capsys, "checks", "ht-bound", "--x", "500")
    assert code == 0 and "violations=0" in out
    code, out, _ = run_out(capsys, "checks", "mertens", "--delta", "-4", "--y", "1e4")
    assert code == 0 and out.startswith("sum=")
    assert run_out(capsys, "checks", "mertens", "--delta", "-4", "--y", "2")[0] == 2


def test_surfaces(capsys):
    code, out, _ = run_out(capsys, "surfaces", "--b0", "6", "--volume-max", "50", "--delta-max", "300", "--points", "5")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0 and tuple(rows[0]) == cli.SURFACE_COLUMNS and len(rows) == 5
    assert all(int(r["with_surface"]) <= int(r["all_classes"]) for r in rows)
    assert run_out(capsys, "surfaces", "--b0", "2", "--volume-max", "50", "--delta-max", "300")[0] == 2
    assert run_out(capsys, "surfaces", "--b0", "1", "--volume-max", "50", "--delta-max", "300")[0] == 2


def test_format_real():
    assert cli.format_real(1 / 3, 6) == "0.333333"
    assert cli.format_real(2.0943951023931953, 15) == "2.0943951023932"
    assert cli.format_real(None, 15) == ""
    assert float(cli.format_real(0.1 + 0.2, 17)) == 0.1 + 0.2


def test_render_csv():
    data = cli.render_csv([(1, True, None, 0.5, "a;b")], ("i", "b", "n", "r", "s"), 15)
    assert data == b"i,b,n,r,s\n1,true,,0.5,a;b\n"
    assert cli.render_csv([], ("x",), 15) == b"x\n"


def test_config_validation():
    with pytest.raises(ConfigurationError):
        cli.CliConfig(threads=0)
    with pytest.raises(ConfigurationError):
        cli.CliConfig(precision=18)
    assert cli.CliConfig().precision == 15


def test_threads_env(monkeypatch):
    monkeypatch.setenv("ORBICENSUS_THREADS", "3")
    assert cli._default_threads() == 3
    monkeypatch.delenv("ORBICENSUS_THREADS")
    assert cli._default_threads() >= 1


def test_lock_blocks_second_run(tmp_path):
    path = tmp_path / "x.csv"
    with cli.run_lock(path):
        with open(str(path) + ".lock", "a") as fh:
            with pytest.raises(BlockingIOError):
                fcntl.flock(fh, fcntl.LOCK_EX | fcntl.LOCK_NB)


def test_rerun_is_identical(capsys, tmp_path):
    path = tmp_path / "c.csv"
    argv = ["census2d", "--disc-max", "3000", "--with-systole", "--out", str(path)]
    run_out(capsys, *argv)
    first = path.read_bytes()
    path.write_bytes(first[: len(first) // 2])  # simulate a damaged earlier attempt
    run_out(capsys, *argv)
    assert path.read_bytes() == first


@pytest.mark.parametrize(
    "argv",
    [
        ["census2d", "--disc-max", "20000", "--with-systole"],
        ["census3d", "--field-d", "-7", "--volume-max", "80"],
        ["density", "phi-embeddable", "--delta", "-4", "--x-min", "1e3", "--x-max", "3e5", "--points", "6"],
        ["density", "no-small-field", "--h-fixed", "12", "--x-min", "1e3", "--x-max", "3e5", "--points", "6"],
        ["density", "short-systole", "--x0", "2.5", "--x-min", "1e3", "--x-max", "3e5", "--points", "6"],
        ["surfaces", "--b0", "6", "--volume-max", "100", "--delta-max", "500"],
    ],
    ids=["census2d", "census3d", "phi-embeddable", "no-small-field", "short-systole", "surfaces"],
)
def test_determinism_across_threads(argv, capsys, tmp_path):
    digests = set()
    for threads in (1, 2, 8):
        path = tmp_path / f"t{threads}.csv"
        assert run_out(capsys, *argv, "--threads", str(threads), "--out", str(path))[0] == 0
        digests.add(hashlib.sha256(path.read_bytes()).hexdigest())
    assert len(digests) == 1


def test_module_entry_point(tmp_path):
    env = dict(os.environ, ORBICENSUS_THREADS="1")
    proc = subprocess.run([sys.executable, "-m", "orbicensus", "embeds", "--disc", "10", "--delta", "-4"], capture_output=True, text=True, env=env)
    assert proc.returncode == 0 and proc.stdout.strip() == "false"
    proc = subprocess.run([sys.executable, "-m", "orbicensus", "census2d", "--disc-max", "0"], capture_output=True, text=True, env=env)
    assert proc.returncode == 2 and "usage" in proc.stderr
