"""Smoke test for the freelat_py extension module.

Build first:

    cargo build --release -p freelat-python --features extension-module

then run `python3 python/smoke_test.py` from the repository root. The script
copies target/release/libfreelat_py.so to a temporary directory under the
importable name freelat_py.so (set FREELAT_PY_LIB to use another build).
"""

import importlib
import json
import math
import os
import shutil
import sys
import tempfile

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))


def load_module():
    lib = os.environ.get("FREELAT_PY_LIB", os.path.join(ROOT, "target", "release", "libfreelat_py.so"))
    if not os.path.exists(lib):
        sys.exit(f"extension not found at {lib}; build it with the extension-module feature")
    tmp = tempfile.mkdtemp()
    shutil.copy(lib, os.path.join(tmp, "freelat_py.so"))
    sys.path.insert(0, tmp)
    return importlib.import_module("freelat_py")


def main():
    fl = load_module()

    a = fl.Space.fixture("SPACE-A")
    b = fl.Space.fixture("SPACE-B")
    c = fl.Space.fixture("SPACE-C")
    assert a.dim == 2
    assert sorted(map(tuple, b.positive_part_vertices)) == [(0.0, 0.0), (0.0, 1.0), (1.0, 0.0)]
    assert abs(a.space_norm([0.5, -0.25]) - 0.5) < 1e-12
    assert b.cone_membership([1.0, 2.0]) and not b.cone_membership([1.0, -2.0])

    diag = json.loads(c.diagnostics())
    assert diag["trivial"]["value"] and diag["j_norm"]["value"] == 0.0

    meet = fl.NormalForm.from_expr('{"inf": [{"gen": [1, 0]}, {"gen": [0, 1]}]}')
    assert (meet.m, meet.n) == (1, 2)
    assert meet.evaluate([0.25, 0.75]) == 0.25
    assert abs(fl.norm_inf(b, meet) - 0.5) < 1e-12
    assert abs(fl.norm_oracle(b, meet, math.inf) - 0.5) < 1e-3

    x = fl.NormalForm([[[1.0, 0.0]]])
    est = json.loads(fl.norm_p_lower(a, x, 1.0, seed=3))
    ref = fl.norm_oracle(a, x, 1.0)
    assert abs(est["value"] - ref) <= 5e-3 * ref, (est["value"], ref)
    assert est["certificate"]["kind"] == "tuple"

    assert fl.factor(a, 1.0, [[0.5, 0.0], [0.0, 0.5]], fl.NormalForm([[[1.0, 1.0]]])) == [0.5, 0.5]
    try:
        fl.factor(a, 1.0, [[0.6, 0.0], [0.0, 0.5]], x)
    except ValueError:
        pass
    else:
        raise AssertionError("infeasible tuple accepted")

    report = json.loads(fl.p_convexity_check(a, 2.0, ['{"gen": [1, 0]}', '{"gen": [0, 1]}'], seed=1))
    assert report["holds"], report

    print("smoke test passed")


if __name__ == "__main__":
    main()
