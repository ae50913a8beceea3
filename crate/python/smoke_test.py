"""Smoke test for the chdim Python bindings.

Build and install first:  maturin build --release -m crates/py/Cargo.toml && pip install target/wheels/chdim_py-*.whl
"""

import json
import math
import tempfile

import chdim_py as ch


def close(a, b, tol):
    return abs(a - b) <= tol * (1 + max(abs(a), abs(b)))


def main():
    a = ch.HeisPoint([1 + 2j], 0.5)
    b = ch.HeisPoint([-0.3 + 0.1j], -1.0)
    c = ch.HeisPoint([0.7j], 2.0)
    ab_c, a_bc = (a * b) * c, a * (b * c)
    assert close(ab_c.t, a_bc.t, 1e-13) and abs(ab_c.v[0] - a_bc.v[0]) < 1e-13
    assert close((a * c).dist(b * c), a.dist(b), 1e-12)
    assert close(a.dilate(2j).dist(b.dilate(2j)), 2 * a.dist(b), 1e-12)
    assert ch.omega([1 + 0j], [1j]) == 1.0

    g = ch.GroupElement.random(2, seed=3)
    h = g * g.inverse()
    eye = ch.GroupElement.identity(2).matrix()
    m = h.matrix()
    scale = m[0][0]
    assert all(abs(m[i][j] / scale - eye[i][j]) < 1e-9 for i in range(3) for j in range(3))
    x, y = [0.1 + 0.2j, -0.3j], [0.4 + 0j, 0.1 + 0.1j]
    assert close(ch.dist(g.act(x), g.act(y)), ch.dist(x, y), 1e-9)

    s = ch.Schottky.bundled()
    ok, witness = s.verify()
    assert ok and witness is None, witness
    gens = s.generators()
    assert len(gens) == 2 and all(e.kind() == "hyperbolic" for e in gens)
    again = ch.Schottky.from_toml(s.to_toml())
    assert again.to_toml() == s.to_toml()

    try:
        ch.Schottky.build(seed=3, forced_shared_chain=True)
        raise AssertionError("forced shared chain built")
    except RuntimeError as e:
        assert "condition 4" in str(e)

    rows = s.limit_points(6)
    assert len(rows) == 4 * 3**5 and len(rows[0]) == 3
    exp = json.loads(s.exponent(8))
    assert 0.3 < exp["delta_series"] < 0.8, exp

    segment = [[0.0, 0.0, i / 20000] for i in range(20000)]
    hd, _ = ch.box_count(segment, "heisenberg")
    ed, _ = ch.box_count(segment, "euclidean")
    assert abs(hd - 2) < 0.2 and abs(ed - 1) < 0.2, (hd, ed)
    assert ch.balogh_check(0.5, 0.5, 2) and not ch.balogh_check(0.5, 1.8, 2)

    checks = json.loads(ch.sanity_battery(instances=200))
    assert all(c["pass"] for c in checks), [c["id"] for c in checks if not c["pass"]]

    with tempfile.TemporaryDirectory() as d:
        summary = json.loads(ch.dimension_run(d, word_length=8))
    delta = summary["delta"]
    print(f"chdim {ch.__version__}: delta {delta:.3f} alpha {summary['alpha']:.3f} beta {summary['beta']:.3f}")
    assert all(gate["pass"] for gate in summary["gates"]), summary["gates"]
    assert not math.isnan(delta)
    print("smoke test passed")


if __name__ == "__main__":
    main()
