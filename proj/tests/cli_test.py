"""End-to-end checks of the rinekf command-line tool.

usage: cli_test.py RINEKF_BINARY DEFAULT_CONFIG
"""

import hashlib
import json
import os
import subprocess
import sys
import tempfile
from pathlib import Path

BIN = sys.argv[1]
CONFIG = Path(sys.argv[2])
failures = []


def run(*args, env=None, expect=0):
    full_env = dict(os.environ)
    full_env.pop("ROBUST_INEKF_LOG_LEVEL", None)
    full_env.update(env or {})
    proc = subprocess.run([BIN, *map(str, args)], capture_output=True, text=True, env=full_env)
    if (proc.returncode == 0) != (expect == 0):
        failures.append(f"{args}: exit {proc.returncode}, stderr {proc.stderr.strip()!r}")
    return proc


def check(cond, what):
    if not cond:
        failures.append(what)


def digest(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


with tempfile.TemporaryDirectory() as tmp:
    tmp = Path(tmp)
    cfg = json.loads(CONFIG.read_text())
    cfg["sim"]["horizon"] = 20.0
    cfg["slips"] = [s for s in cfg["slips"] if s["t_start"] + s["duration"] <= 20.0]
    short = tmp / "short.json"
    short.write_text(json.dumps(cfg))

    # Shipped default config matches the built-in defaults.
    init = run("init-config")
    check(json.loads(init.stdout) == json.loads(CONFIG.read_text()), "config/default.json is stale")

    outputs = {}
    for run_id in ("a", "b"):
        d = tmp / run_id
        run("simulate", "--config", short, "--seed", 11, "--out", d)
        for cost in ("none", "huber", "tukey"):
            run("filter", "--config", short, "--log", d / "log.csv", "--cost", cost,
                "--scale-c", 9, "--out", d / f"{cost}.txt")
        ev = run("evaluate", "--config", short, "--ref", d / "ground_truth.txt",
                 "--est", d / "none.txt", "--est", d / "huber.txt", "--est", d / "tukey.txt",
                 "--rpe-delta", 1.0, "--align", "se3", "--out", d / "metrics.json")
        metrics = json.loads((d / "metrics.json").read_text())
        metrics.pop("reference")  # input path, differs by directory
        outputs[run_id] = (ev.stdout, metrics)

    for name in ("log.csv", "ground_truth.txt", "none.txt", "huber.txt", "tukey.txt",
                 "scenario.json"):
        check(digest(tmp / "a" / name) == digest(tmp / "b" / name), f"{name} differs between runs")
    check(outputs["a"] == outputs["b"], "evaluate output differs between runs")

    table = outputs["a"][0].strip().splitlines()
    header = [c.strip() for c in table[0].split("|")]
    check(header[-4:] == ["RMSE", "ATE", "RPE trans", "RPE rot"], f"bad header {table[0]!r}")
    rows = [[c.strip() for c in line.split("|")] for line in table[1:]
            if line.strip() and not set(line.strip()) <= set("-|+ ")]
    check(len(rows) == 3, f"expected 3 rows, got {table}")
    ates = [float(r[-3]) for r in rows]
    check(ates == sorted(ates), f"rows not sorted by ATE: {ates}")

    sidecar = json.loads((tmp / "a" / "tukey.json").read_text())
    check(sidecar.get("cost") == "tukey", "sidecar lacks cost")

    # Different seeds give different logs.
    run("simulate", "--config", short, "--seed", 12, "--out", tmp / "c")
    check(digest(tmp / "a" / "log.csv") != digest(tmp / "c" / "log.csv"), "seed ignored")

    # Errors: nonzero exit and one line on stderr.
    def one_line_error(proc, needle):
        lines = proc.stderr.strip().splitlines()
        check(proc.returncode != 0, f"expected failure for {needle}")
        check(len(lines) == 1 and needle in lines[0], f"bad error output {proc.stderr!r}")

    broken = dict(cfg)
    broken["noise"] = {k: v for k, v in cfg["noise"].items() if k != "gyro_std"}
    bad = tmp / "bad.json"
    bad.write_text(json.dumps(broken))
    one_line_error(run("simulate", "--config", bad, "--out", tmp / "x", expect=1), "gyro_std")
    one_line_error(run("filter", "--log", tmp / "a" / "log.csv", "--cost", "cauchy",
                       "--out", tmp / "x.txt", expect=1), "cauchy")
    one_line_error(run("evaluate", "--ref", tmp / "a" / "ground_truth.txt",
                       "--est", tmp / "a" / "tukey.txt", "--align", "sim3", expect=1), "sim3")
    one_line_error(run("filter", "--log", tmp / "missing.csv", "--out", tmp / "x.txt", expect=1),
                   "missing.csv")
    garbage = tmp / "garbage.csv"
    garbage.write_text("#rinekf-log,schema=1,imu_rate=400,joint_rate=100\nIMU,0.1,1,2\n")
    one_line_error(run("filter", "--log", garbage, "--out", tmp / "x.txt", expect=1), "line 2")
    one_line_error(run("simulate", "--out", tmp / "y", env={"ROBUST_INEKF_LOG_LEVEL": "loud"},
                       expect=1), "ROBUST_INEKF_LOG_LEVEL")
    quiet = run("filter", "--config", short, "--log", tmp / "a" / "log.csv",
                "--out", tmp / "q.txt", env={"ROBUST_INEKF_LOG_LEVEL": "off"})
    check(quiet.stderr == "", "log level off still writes to stderr")

if failures:
    for f in failures:
        print("FAIL:", f)
    sys.exit(1)
print("cli: all checks passed")
