"""Smoke test for the ppir Python bindings.

Install first:  pip install --no-build-isolation -e crates/py
"""

import math
import random

import ppir


def check_mpc_product():
    rng = random.Random(3)
    lhs = [[rng.uniform(-5, 5) for _ in range(40)] for _ in range(4)]
    col = [rng.random() for _ in range(40)]
    got = ppir.mpc_product(lhs, col, seed=7)
    for row, g in zip(lhs, got):
        want = sum(a * b for a, b in zip(row, col))
        bound = ppir.mpc_error_bound(row, sum(col))
        assert abs(g - want) <= bound, (g, want, bound)


def check_registration():
    f = ppir.Fixture("blob2d", seed=1)
    moving, target = f.moving, f.target
    assert moving.dims == [128, 128] and len(moving) == 128 * 128

    clear = ppir.register(moving, target, levels="2:1,1:0")
    truth = f.truth_displacement()
    rmse = ppir.displacement_rmse(clear.displacement, truth, target.spacing)
    assert rmse < 0.2, rmse

    mpc = ppir.register(moving, target, backend="mpc", levels="2:1,1:0")
    diff = ppir.displacement_rmse(mpc.displacement, clear.displacement, target.spacing)
    assert diff < 0.05, diff
    assert mpc.party1_bytes > 0 and mpc.party2_bytes > 0
    e_clear = clear.intensity_error(moving, target)
    e_mpc = mpc.intensity_error(moving, target)
    assert math.isclose(e_clear, e_mpc, rel_tol=1e-3), (e_clear, e_mpc)
    print(f"clear rmse vs truth {rmse:.4f}; mpc vs clear {diff:.2e}; {mpc!r}")


def check_errors():
    try:
        ppir.Fixture("unknown")
    except ValueError:
        pass
    else:
        raise AssertionError("bad fixture kind accepted")
    img = ppir.Image([4, 4], [0.0] * 16)
    try:
        ppir.register(img, img, backend="quantum")
    except ValueError:
        pass
    else:
        raise AssertionError("bad backend accepted")


if __name__ == "__main__":
    check_mpc_product()
    check_registration()
    check_errors()
    print("smoke test passed")
