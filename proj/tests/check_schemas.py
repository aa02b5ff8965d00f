"""Runs the CLI on the built-in fixtures and validates every JSON output."""

import json
import pathlib
import subprocess
import sys

import jsonschema


def main() -> int:
    cli, schema_dir, work = sys.argv[1], pathlib.Path(sys.argv[2]), pathlib.Path(sys.argv[3])
    work.mkdir(parents=True, exist_ok=True)
    subprocess.run([cli, "fixtures", "all", str(work)], check=True, capture_output=True)
    schemas = {p.name.split(".")[0]: json.loads(p.read_text()) for p in schema_dir.glob("*.schema.json")}

    failures = 0
    for fixture in sorted(work.glob("E*.json")):
        runs = [
            ("ensemble", None),
            ("decomposition", ["decompose", str(fixture)]),
            ("rates", ["rates", "--table1", str(fixture)]),
            ("codec", ["codec", "--trials", "200", str(fixture)]),
        ]
        for schema, args in runs:
            if args is None:
                doc = json.loads(fixture.read_text())
            else:
                out = subprocess.run([cli, *args], check=True, capture_output=True, text=True).stdout
                doc = json.loads(out)
            try:
                jsonschema.validate(doc, schemas[schema])
            except jsonschema.ValidationError as err:
                failures += 1
                print(f"{fixture.name} {schema}: {err.message}")
    print(f"{failures} schema failure(s)")
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
