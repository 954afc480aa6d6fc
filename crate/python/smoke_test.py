"""Smoke test for the pyqitrs extension.

Build first:
    cargo build -p qitrs-py --release --features extension-module
    cp target/release/libpyqitrs.so python/pyqitrs.so
"""

import pathlib
import sys

HERE = pathlib.Path(__file__).resolve().parent
sys.path.insert(0, str(HERE))

import pyqitrs  # noqa: E402

CORPUS = HERE.parent / "crates" / "core" / "corpus"


def main():
    running = pyqitrs.Program((CORPUS / "running.trs").read_text())
    proof = running.eval("f(s0 s1 nil)")
    assert proof["result"] == "nil", proof["result"]
    assert proof["stats"]["active_count"] == 3

    assert not running.check_order("ppo")["overall"]
    assert running.check_order("eppo")["overall"]
    assert running.blind().check_order("ppo")["overall"]

    append_qi = (CORPUS / "append.qi").read_text()
    append = pyqitrs.Program((CORPUS / "append.trs").read_text())
    assert append.check_qi(append_qi)["overall"] == "Valid"

    compiled = pyqitrs.Program(pyqitrs.bc_compile((CORPUS / "add.bc").read_text()))
    report = compiled.certify()
    assert report["verdicts"]["P-criterion"] == "pass", report["verdicts"]

    table = running.blind().measure(2, 7)
    sizes = [row["worst_result_size"] for row in table["rows"]]
    assert sizes == [1, 2, 4, 8, 16, 32], sizes

    term = pyqitrs.random_bc(7, 3)
    pyqitrs.Program(pyqitrs.bc_compile(term))
    print("pyqitrs smoke test passed")


if __name__ == "__main__":
    main()
