#!/usr/bin/env python3
# Copyright 2026 The lcsh-loop Authors
# SPDX-License-Identifier: Apache-2.0
"""Starts `lcsh-loop serve`, fetches /openapi.json and checks it against the
OpenAPI 3.1 meta-schema.

usage: validate_openapi.py LCSH_LOOP FIXTURE_DIR [OUT_JSON]

Exit status: 0 valid, 1 invalid or unreachable, 77 validator not installed.
"""

import json
import re
import subprocess
import sys
import urllib.request

try:
    from openapi_spec_validator import validate
except ImportError:
    print("openapi-spec-validator is not installed", file=sys.stderr)
    sys.exit(77)


def fetch_document(cli, fixtures):
    proc = subprocess.Popen(
        [cli, "serve", "--port", "0", "--fixtures", fixtures],
        stderr=subprocess.PIPE,
        stdout=subprocess.DEVNULL,
        text=True,
    )
    try:
        line = proc.stderr.readline()
        match = re.search(r"listening on (http://\S+)", line)
        if not match:
            raise RuntimeError("server did not start: " + line.strip())
        with urllib.request.urlopen(match.group(1) + "/openapi.json", timeout=10) as resp:
            return json.load(resp)
    finally:
        proc.terminate()
        proc.wait(timeout=10)


def main(argv):
    if len(argv) < 3:
        print(__doc__, file=sys.stderr)
        return 2
    try:
        doc = fetch_document(argv[1], argv[2])
    except Exception as exc:  # noqa: BLE001
        print(f"cannot fetch the document: {exc}", file=sys.stderr)
        return 1
    if len(argv) > 3:
        with open(argv[3], "w", encoding="utf-8") as out:
            json.dump(doc, out, indent=2, sort_keys=True)
    try:
        validate(doc)
    except Exception as exc:  # noqa: BLE001
        print(f"invalid: {exc}", file=sys.stderr)
        return 1
    print(f"valid OpenAPI {doc.get('openapi')} with {len(doc.get('paths', {}))} paths")
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv))
