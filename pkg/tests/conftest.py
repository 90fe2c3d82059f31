from __future__ import annotations

import json

import pytest


@pytest.fixture
def write_jsonl(tmp_path):
    """Write a list of dicts as a JSON-Lines file under tmp_path, return its path."""

    def _write(name, records):
        path = tmp_path / name
        with open(path, "w", encoding="utf-8") as fh:
            for rec in records:
                fh.write(json.dumps(rec, ensure_ascii=False) + "\n")
        return path

    return _write
