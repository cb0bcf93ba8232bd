import numpy as np

from sblimp import ControllerGains, DesignParams
from sblimp.verify import (check_allocation, check_pendulum, check_velocity_oracle,
                           random_designs, run_checks)


def test_all_pass_on_defaults():
    results = run_checks(DesignParams(), ControllerGains())
    assert [r.name for r in results] == ["allocation identity", "analytic velocity oracle",
                                         "pendulum decay"]
    assert all(r.passed for r in results), [r.line() for r in results]


def test_zero_tilt_fails_every_check():
    results = run_checks(DesignParams(eta=0.0), ControllerGains())
    assert not any(r.passed for r in results)
    assert all("eta = 0" in r.detail for r in results)


def test_random_designs_are_valid():
    ds = random_designs(50, np.random.default_rng(1))
    assert len(ds) == 50 and len({d.eta for d in ds}) == 50


def test_oracle_detects_saturation():
    # a thrust ceiling just above hover makes the step response saturate
    p = DesignParams(f_max=0.0225)
    r = check_velocity_oracle(p, ControllerGains())
    assert not r.passed and "saturated" in r.detail


def test_pendulum_line_format():
    r = check_pendulum(DesignParams(), n_runs=2)
    assert r.line().startswith("PASS pendulum decay:")


def test_allocation_detail():
    assert "1001 designs" in check_allocation(DesignParams()).detail
