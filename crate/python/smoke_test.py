"""Smoke test for the compiled `rase` extension module.

Build it first:

    cargo build --release -p rase-py --features extension-module
    cp target/release/librase.so python/rase.so
"""

import math
import os
import sys
import tempfile

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import rase


def main():
    grid = rase.Grid(21, 41)
    assert grid.shape == (21, 41)
    rho = rase.Density.gaussian(grid, 1e6)
    assert abs(rho.total - 1e6) < 1e-3
    g = rho.coupling_for_depth(0.2)
    assert abs(rho.peak_optical_depth(g) - 0.2) < 1e-12

    assert abs(rase.weak_coupling_survival(0.2, 4.0) - math.exp(-0.8)) < 1e-12
    assert abs(rase.photon_overlap(4.0, 1.0) - math.exp(-4.0)) < 1e-12

    sim = rase.Simulator(n_z=31, n_delta=61, dt=1e-2, sample_interval=0.1)
    flat = sim.flat(1.0)
    assert abs(flat.emission_probability - 0.70) < 0.05, flat
    assert flat.flux_deviation < 1e-3
    p_sep, mm = sim.mode_matched(3.0)
    assert 0.0 <= p_sep < 0.1 and mm.emission_probability > flat.emission_probability

    table = sim.run("fig7", [0.5, 1.0, 2.0])
    assert sorted(table) == ["alpha_l", "efficiency"]
    assert table["alpha_l"] == [0.5, 1.0, 2.0]

    try:
        rase.Grid(1, 3)
    except ValueError as e:
        print("rejected degenerate grid:", e)
    else:
        raise AssertionError("degenerate grid accepted")

    with tempfile.TemporaryDirectory() as out:
        files = rase.run_config(
            f'experiment = "fig9"\nout_dir = "{out}"\nn_z = 11\nn_delta = 21\n'
            "dt = 0.01\nsample_interval = 0.1\nalpha_l = [1.0]\n"
        )
        assert [os.path.basename(f) for f in files] == ["fig9.csv", "fig9.meta.json"]
        with open(files[0]) as fh:
            assert fh.readline().strip() == "alpha_l,efficiency"

    print(f"rase {rase.__version__}: flat efficiency at alpha_l = 1 is {flat.emission_probability:.4f}")
    print("smoke test passed")


if __name__ == "__main__":
    main()
