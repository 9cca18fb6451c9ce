#!/usr/bin/env python3
# Copyright (c) 2026, the oan authors
# SPDX-License-Identifier: Apache-2.0
"""Runs every oan_cli subcommand on a tiny setup and validates the JSON it
emits against docs/schemas. Usage: validate_outputs.py OAN_CLI SCHEMA_DIR"""

import json
import os
import subprocess
import sys
import tempfile
from pathlib import Path

import jsonschema

FAST = ["--epochs", "2", "--per-class", "6", "--hidden", "16", "--embed", "8", "--teacher-epochs", "1"]


def main() -> int:
    cli, schema_dir = sys.argv[1], Path(sys.argv[2])
    schemas = {p.name.removesuffix(".schema.json"): json.loads(p.read_text()) for p in schema_dir.glob("*.schema.json")}
    failures = 0

    def check(kind: str, doc, where: str) -> None:
        nonlocal failures
        try:
            jsonschema.validate(doc, schemas[kind])
        except jsonschema.ValidationError as e:
            failures += 1
            print(f"FAIL {where} against {kind}: {e.message}")
        else:
            print(f"ok   {where}")

    with tempfile.TemporaryDirectory() as tmp:
        out = Path(tmp)
        runs = {
            "gen-data": ["gen-data", "--out", str(out / "d"), "--per-class", "6"],
            "train": ["train", "--out", str(out / "t")] + FAST,
            "eval": ["eval", "--checkpoint", str(out / "t" / "checkpoint.oanck"), "--out", str(out / "e"),
                     "--per-class", "6"],
            "ablate": ["ablate", "--out", str(out / "a"), "--seeds", "1,2"] + FAST,
            "sweep": ["sweep", "--out", str(out / "s"), "--seeds", "1"] + FAST,
            "gradcheck": ["gradcheck", "--out", str(out / "g"), "--instances", "2"],
        }
        env = {**os.environ, "OAN_LOG": "error"}
        for name, args in runs.items():
            proc = subprocess.run([cli] + args, capture_output=True, text=True, env=env)
            if proc.returncode != 0:
                print(f"FAIL {name} exited {proc.returncode}: {proc.stderr.strip()}")
                failures += 1
                continue
            line = next(l for l in proc.stdout.splitlines() if l.startswith("resolved config: "))
            check("resolved_config", json.loads(line.removeprefix("resolved config: ")), f"{name} stdout")

        for i, line in enumerate((out / "t" / "metrics.jsonl").read_text().splitlines()):
            check("metrics_line", json.loads(line), f"metrics.jsonl:{i + 1}")
        check("train_config", json.loads((out / "t" / "config.json").read_text()), "config.json")
        for d in ("t", "e"):
            for mode in ("real", "binary"):
                check("retrieval_report", json.loads((out / d / f"report_{mode}.json").read_text()),
                      f"{d}/report_{mode}.json")
        check("ablation", json.loads((out / "a" / "ablation.json").read_text()), "ablation.json")
        check("sweep", json.loads((out / "s" / "sweep.json").read_text()), "sweep.json")
        check("gradcheck", json.loads((out / "g" / "gradcheck.json").read_text()), "gradcheck.json")

    print(f"{failures} schema failures")
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
