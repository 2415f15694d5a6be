"""Smoke test for the janus_lite extension module.

Build and install first:
    pip install maturin
    pip install --no-build-isolation -e crates/py
"""

import json
import pathlib
import sys

import janus_lite

ROOT = pathlib.Path(__file__).resolve().parent.parent
CORPUS = ROOT / "crates" / "core" / "tests" / "corpus"
REGRESSION = ROOT / "crates" / "core" / "tests" / "regression"


def read(path):
    return path.read_text()


def main():
    c = janus_lite.parse(read(CORPUS / "mint.msol"))
    assert c.name == "MintableToken", c.name
    assert "totalSupply" in c.state_vars
    assert set(c.functions) == {"transfer", "mint"}

    report = janus_lite.analyze(c)
    assert report.is_risky and report.exit_code == 1
    assert report.categories == ["ArbitrarilyMint"], report.categories
    doc = json.loads(report.to_json())
    assert doc["schema_version"] == janus_lite.SCHEMA_VERSION
    assert doc["risks"][0]["variables"] == ["totalSupply"]

    # Source strings work as well as parsed contracts.
    clean = janus_lite.analyze(read(CORPUS / "fixed_mint.msol"))
    assert not clean.is_risky and clean.exit_code == 0

    fp = janus_lite.analyze(read(REGRESSION / "pied_fp.msol"))
    assert not fp.is_risky, fp.categories
    fn = janus_lite.analyze(read(REGRESSION / "pied_fn.msol"))
    assert fn.categories == ["DisableTransferring"], fn.categories

    dset = janus_lite.differences(read(REGRESSION / "safe_token.msol"))
    assert dset["differences"] == [], dset["differences"]

    verdicts = {v["variable"]: v for v in janus_lite.recognize(c)}
    assert verdicts["totalSupply"]["is_financial"]
    assert not verdicts["owner"]["is_financial"]

    theorems = janus_lite.oracle(read(CORPUS / "pause.msol"), depth=2)
    assert theorems["violations"] == [], theorems["violations"]
    assert theorems["analyzer_executions"] < theorems["oracle_executions"]

    try:
        janus_lite.parse("contract X { uint a = 1.5; }")
    except ValueError as e:
        assert str(e).startswith("1:"), str(e)
    else:
        raise AssertionError("expected a parse error")

    print("python smoke test: ok")
    return 0


if __name__ == "__main__":
    sys.exit(main())
