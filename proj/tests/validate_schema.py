#!/usr/bin/env python3
"""Runs the CLI over the corpus and checks every report against the schema.

usage: validate_schema.py <symalias binary> <schema.json> <corpus dir>
"""
import json
import pathlib
import subprocess
import sys
import tempfile

import jsonschema


def run(cli, *args):
    p = subprocess.run([cli, *args], capture_output=True, text=True)
    return p.returncode, p.stdout, p.stderr


def main():
    cli, schema_path, corpus = sys.argv[1], sys.argv[2], pathlib.Path(sys.argv[3])
    schema = json.loads(pathlib.Path(schema_path).read_text())
    jsonschema.Draft202012Validator.check_schema(schema)
    validator = jsonschema.Draft202012Validator(schema)
    failures = []

    def check(name, ok, detail=""):
        if not ok:
            failures.append(f"{name}: {detail}")

    programs = sorted(corpus.glob("*.ir"))
    check("corpus size", len(programs) >= 25, f"{len(programs)} programs")
    for ir in programs:
        for extra in ([], ["--no-icall"]):
            tag = ir.name + (" " + " ".join(extra) if extra else "")
            rc, out, err = run(cli, "--ir", str(ir), *extra)
            check(tag, rc in (0, 1), f"exit {rc}: {err}")
            if rc not in (0, 1):
                continue
            rep = json.loads(out)
            errors = sorted(validator.iter_errors(rep), key=lambda e: list(e.path))
            check(tag, not errors, "; ".join(f"{list(e.path)}: {e.message}" for e in errors[:3]))
            t = rep["taint"]
            check(tag, t["alerts"] == len(rep["alerts"]), "alert count mismatch")
            check(tag, t["alerts"] <= t["tainted_sinks"], "more alerts than tainted sinks")
            check(tag, t["tainted_blocks"] <= t["covered_blocks"], "tainted blocks exceed covered")
            check(tag, (rc == 1) == bool(rep["alerts"]), f"exit {rc} with {len(rep['alerts'])} alerts")
            i = rep["icalls"]
            check(tag, i["resolved_icalls"] <= i["all_icalls"], "resolved exceeds all")
            # byte-identical modulo timings
            rc2, out2, _ = run(cli, "--ir", str(ir), *extra)
            a, b = json.loads(out), json.loads(out2)
            a.pop("timings", None)
            b.pop("timings", None)
            check(tag + " determinism", rc == rc2 and json.dumps(a) == json.dumps(b), "reports differ")

    rc, out, _ = run(cli, "--ir", str(corpus / "intuitive.ir"), "--seed", "main:bb0:0:load(R3+0x8)")
    rep = json.loads(out)
    check("seed query", rc == 0 and not list(validator.iter_errors(rep)), "invalid report")
    check("seed query aliases", rep.get("queries", [{}])[0].get("aliases") ==
          ["R1", "load(R3+0x8)", "load(store(R6+0x4)+0x8)"], str(rep.get("queries")))

    with tempfile.TemporaryDirectory() as d:
        bad = pathlib.Path(d) / "bad.ir"
        bad.write_text("func main @0x1000 {\nbb0:\n  r1 = frobnicate r2\n}\n")
        rc, _, err = run(cli, "--ir", str(bad))
        check("parse error exit", rc == 2, f"exit {rc}")
        rc, _, _ = run(cli, "--ir", str(pathlib.Path(d) / "missing.ir"))
        check("missing file exit", rc == 2, f"exit {rc}")
        cfg = pathlib.Path(d) / "cfg.json"
        cfg.write_text('{"sinks": [{"name": "strcpy", "bogus": 1}], "colour": 1}')
        rc, _, _ = run(cli, "--ir", str(corpus / "system_cmd.ir"), "--config", str(cfg))
        check("config error exit", rc == 2, f"exit {rc}")
        outp = pathlib.Path(d) / "r.txt"
        rc, _, _ = run(cli, "--ir", str(corpus / "system_cmd.ir"), "--format", "text", "--out", str(outp),
                       "--no-alert-exit")
        check("text report", rc == 0 and "Alerts 1" in outp.read_text(), f"exit {rc}")

    for f in failures:
        print("FAIL", f)
    print(f"{len(programs)} programs checked, {len(failures)} failures")
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
