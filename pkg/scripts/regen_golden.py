"""Regenerate the CLI golden files under tests/golden.

Run only after checking by hand that a behavior change is intended; the
goldens are the regression anchor for the command-line output.
"""
import contextlib
import hashlib
import io
import json
import os
import sys
import tempfile
from pathlib import Path

from dcf.cli import main

GOLDEN = Path(__file__).resolve().parent.parent / "tests" / "golden"

INVOCATIONS = {
    "factor_2701": ["factor", "2701", "--case", "73", "--method", "all"],
    "verify_1311_th1": ["verify", "1311", "--claim", "th1"],
    "sweep_1e5_th1_obs2": ["sweep", "--from", "1", "--to", "100000", "--claims", "th1,obs2",
                           "--out", "r.jsonl"],
    "stats_transition_1e6": ["stats", "--transition", "--primes", "1000000"],
}


def mask(obj):
    """Blank out wall-clock fields so goldens are stable."""
    if isinstance(obj, dict):
        return {k: (None if k == "elapsed" else mask(v)) for k, v in obj.items()}
    if isinstance(obj, list):
        return [mask(v) for v in obj]
    return obj


def run(argv):
    out = io.StringIO()
    with contextlib.redirect_stdout(out), contextlib.redirect_stderr(io.StringIO()):
        code = main(argv)
    return code, json.loads(out.getvalue())


def capture(name, argv):
    with tempfile.TemporaryDirectory() as tmp:
        cwd = os.getcwd()
        os.chdir(tmp)
        try:
            code, payload = run(argv)
            digest = None
            if "--out" in argv:
                data = Path(argv[argv.index("--out") + 1]).read_bytes()
                digest = hashlib.sha256(data).hexdigest()
        finally:
            os.chdir(cwd)
    return {"argv": argv, "exit": code, "stdout": mask(payload), "out_sha256": digest}


if __name__ == "__main__":
    GOLDEN.mkdir(parents=True, exist_ok=True)
    names = sys.argv[1:] or list(INVOCATIONS)
    for name in names:
        doc = capture(name, INVOCATIONS[name])
        (GOLDEN / f"{name}.json").write_text(json.dumps(doc, indent=1) + "\n")
        print(f"wrote {name}: exit {doc['exit']}")
