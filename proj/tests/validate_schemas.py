#!/usr/bin/env python3
"""Run the CLI in JSON mode and validate each output against schemas/."""

import json
import pathlib
import subprocess
import sys

import jsonschema
from referencing import Registry, Resource

CASES = [
    ("plan", ["plan", "--target", "51", "--steps", "4"]),
    ("plan", ["plan", "--target", "100", "--alpha", "10"]),
    ("distill", ["distill", "--target", "100", "--alpha", "10"]),
    ("distill", ["distill", "--target", "100", "--alpha", "10", "--squeeze", "0.75", "--model", "exact"]),
    ("distill", ["--seed", "5", "distill", "--target", "100", "--alpha", "10", "--sample"]),
    ("explore", ["explore", "--alpha", "4", "--depth", "4"]),
    ("delete-prime", ["delete-prime", "--p", "101", "--alpha", "10"]),
    ("detuning-table", ["detuning-table"]),
    ("detuning-table", ["detuning-table", "--phases", "0.3,pi/3", "--cooperativity", "40"]),
    ("source-stats", ["source-stats", "--alpha", "10", "--squeeze", "0.75"]),
    ("source-stats", ["source-stats", "--alpha", "3", "--amplitudes"]),
    ("pulse-fidelity", ["pulse-fidelity", "--alpha", "0.5", "--trunc", "2,2,2", "--center", "50",
                        "--width", "10", "--t-max", "100", "--sample-every", "200", "--phi", "pi,pi/2"]),
]

ERROR_CASES = [
    (2, ["plan"]),
    (2, ["frobnicate"]),
    (1, ["detuning-table", "--phases", "0"]),
    (1, ["distill", "--target", "500", "--alpha", "10"]),
]


def main() -> int:
    binary, schema_dir = sys.argv[1], pathlib.Path(sys.argv[2])
    schemas = {p.name: json.loads(p.read_text()) for p in schema_dir.glob("*.schema.json")}
    for name, schema in schemas.items():
        jsonschema.Draft202012Validator.check_schema(schema)
    registry = Registry().with_resources(
        (name, Resource.from_contents(schema)) for name, schema in schemas.items()
    )

    def validator(name):
        return jsonschema.Draft202012Validator(schemas[name + ".schema.json"], registry=registry)

    failures = 0
    for name, args in CASES:
        proc = subprocess.run([binary, "--format", "json", *args], capture_output=True, text=True)
        errors = [] if proc.returncode == 0 else [f"exit {proc.returncode}: {proc.stderr.strip()}"]
        if not errors:
            errors = [e.message for e in validator(name).iter_errors(json.loads(proc.stdout))]
        print(("ok   " if not errors else "FAIL ") + " ".join(args))
        for e in errors[:5]:
            print("     " + e)
        failures += bool(errors)

    for code, args in ERROR_CASES:
        proc = subprocess.run([binary, *args], capture_output=True, text=True)
        errors = [] if proc.returncode == code else [f"exit {proc.returncode}, expected {code}"]
        if not errors:
            errors = [e.message for e in validator("error").iter_errors(json.loads(proc.stderr))]
        print(("ok   " if not errors else "FAIL ") + " ".join(args) + f" (exit {code})")
        for e in errors[:5]:
            print("     " + e)
        failures += bool(errors)
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
