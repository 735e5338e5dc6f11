"""Smoke test for the `mbx` extension module.

Build it first, e.g. `pip install --no-build-isolation ./crates/py`.
"""

import pathlib

import mbx

CORPUS = pathlib.Path(__file__).resolve().parent.parent / "crates" / "core" / "corpus"


def main():
    lock = mbx.Program((CORPUS / "lock.mbx").read_text())
    assert "FreeLock" in lock.definitions
    report = lock.check()
    assert report["accepted"], report

    bad = mbx.Program((CORPUS / "future_deadlock.mbx").read_text())
    report = bad.check()
    assert not report["accepted"]
    assert report["main"]["diagnostics"][0]["code"] == "cycle"

    summary = lock.explore(bounds=["lock"])
    assert summary["deadlock_states"] == 0
    assert summary["bounds"]["lock"]["per_tag"]["release"] == [0, 1]

    trace = lock.run(seed=1)
    assert trace["done"]

    assert mbx.includes("A.A*", "A*") == (True, None)
    holds, witness = mbx.includes("A*", "A.A*")
    assert not holds and witness == "[]"
    assert mbx.equivalent("A.B", "B.A")
    assert mbx.residual("A.B + A", "A") is not None
    assert mbx.is_normal_form("A.B + C")
    assert mbx.subtype("?A", "?(A + B)")
    assert mbx.classify("?1") == (True, True, True)
    assert mbx.classify("?0")[1] is False

    medium = mbx.encode_session((CORPUS / "session.st").read_text())
    session = mbx.Program(medium)
    assert session.check()["accepted"]

    try:
        mbx.Program("main = (")
    except mbx.MbxSyntaxError:
        pass
    else:
        raise AssertionError("syntax error not raised")

    print("python smoke test ok")


if __name__ == "__main__":
    main()
