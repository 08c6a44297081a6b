"""Builds the extension module if needed and exercises the Python bindings end to end.

Run from the repository root: python3 python/smoke_test.py
"""

import json
import math
import shutil
import subprocess
import sys
import tempfile
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent


def load_module():
    build = ROOT / "target" / "python"
    build.mkdir(parents=True, exist_ok=True)
    subprocess.run(["cargo", "build", "--release", "-p", "oscillet-py"], cwd=ROOT, check=True)
    lib = ROOT / "target" / "release" / "liboscillet_py.so"
    shutil.copy(lib, build / "oscillet.so")
    sys.path.insert(0, str(build))
    import oscillet

    return oscillet


def main():
    osc = load_module()

    spec = osc.GridSpec(1, 8)
    assert spec.side == 256 and len(spec) == 256
    xs = [i / spec.side for i in range(spec.side)]
    f = osc.GridFunction.from_real(spec, [math.sin(2 * math.pi * 3 * x) + 0.2 * math.cos(2 * math.pi * 17 * x) for x in xs])

    for family in ["meyer", "db4"]:
        basis = osc.WaveletBasis(spec, family)
        c = basis.analyze(f)
        rec = basis.synthesize(c)
        assert rec.max_abs_diff(f) < 1e-10, family
        assert abs(c.energy() - f.lp_norm(2.0) ** 2) < 1e-9, family

    basis = osc.WaveletBasis(spec)
    c = basis.analyze(f)
    value = osc.tlm(c, -0.2, 0.1, 2.0, 2.0)
    assert value > 0.0
    assert abs(osc.tlm(c, 0.0, 0.5, 2.0, 2.0) - osc.tl(c, 0.0, 2.0, 2.0)) < 1e-12 * value
    assert osc.oscillation(f, basis, -0.2, 0.1, 2.0, 2.0) > 0.0

    lift = osc.heat_lift(f, beta=1.0)
    parts = lift.tent_norms(-0.2, 0.1, 2.0, 2.0)
    assert len(parts) == 4 and all(p >= 0.0 for p in parts)
    back = lift.reconstruct()
    mean = sum(f.values()) / len(spec)
    assert max(abs(a - b - mean) for a, b in zip(f.values(), back.values())) < 1e-4

    g = osc.riesz(f, 1)
    assert abs(g.lp_norm(2.0) - f.lp_norm(2.0)) < 1e-10

    try:
        osc.GridSpec(1, 0)
    except ValueError:
        pass
    else:
        raise AssertionError("invalid grid accepted")

    with tempfile.TemporaryDirectory() as tmp:
        path = Path(tmp) / "f.bin"
        f.save(str(path))
        assert osc.GridFunction.load(str(path)).max_abs_diff(f) == 0.0
        cpath = Path(tmp) / "c.json"
        c.save_json(str(cpath))
        assert osc.CoeffField.load_json(str(cpath)).data() == c.data()
        summary = json.loads(osc.run_suite("quick", 42, str(Path(tmp) / "reports")))
        assert summary["all_pass"], summary
        assert (Path(tmp) / "reports" / "digest.txt").exists()

    print("python smoke test passed")


if __name__ == "__main__":
    main()
