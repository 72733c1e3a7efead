"""Smoke tests for the python surface; deep numerics live in the C++ suites."""

import math

import pytest

import relaytune as rt


def test_version():
    assert rt.__version__


def test_frequency_response_magnitude():
    plant = rt.inner_plant(rt.InnerParams(t_prop=0.2, t_1=0.5, tau=0.1, k_eq=1.0))
    re, im = rt.freq_response(plant, 2.0)
    mag = math.hypot(re, im)
    w = 2.0
    expected = 1.0 / (w * math.hypot(0.2 * w, 1.0) * math.hypot(0.5 * w, 1.0))
    assert mag == pytest.approx(expected, rel=1e-12)


def test_harmonic_balance_solves_and_scales_with_h():
    plant = rt.inner_plant(rt.InnerParams(t_prop=0.05, t_1=0.4, tau=0.01, k_eq=2.0))
    hb1 = rt.solve_harmonic_balance(plant, beta=-0.7, h=0.1)
    hb2 = rt.solve_harmonic_balance(plant, beta=-0.7, h=0.2)
    assert hb1 is not None and hb2 is not None
    assert hb1.omega0 == pytest.approx(hb2.omega0, rel=1e-9)
    assert hb2.a0 == pytest.approx(2.0 * hb1.a0, rel=1e-9)


def test_invalid_model_raises():
    with pytest.raises(rt.ModelError):
        rt.inner_plant(rt.InnerParams(t_prop=-1.0, t_1=0.5, tau=0.0, k_eq=1.0))


def test_relay_run_yields_steady_cycle_and_input_matrix():
    plant = rt.inner_plant(rt.InnerParams(t_prop=0.1, t_1=0.5, tau=0.05, k_eq=1.0))
    sim = rt.SimConfig()
    sim.duration = 30.0
    out = rt.run_relay_test(plant, rt.MRFTConfig(beta=-0.6, h=0.1), sim)
    assert out.osc.steady
    assert out.osc.omega0 == pytest.approx(2 * math.pi / out.osc.period, rel=1e-9)
    x = rt.preprocess_to_input(out.osc, len(out.osc.pv) + 10)
    assert x.shape == (2, len(out.osc.pv) + 10)
    assert x.max() == pytest.approx(1.0)


def test_optimize_and_cross_costs():
    plant = rt.inner_plant(rt.InnerParams(t_prop=0.015, t_1=0.2005, tau=0.025, k_eq=1.0))
    spec = rt.TuningSpec()
    spec.t_s = 5.0
    spec.restarts = 2
    tuned = rt.optimize_pd(plant, spec)
    assert tuned.margin_deg >= 19.5
    assert rt.deterioration(tuned.gains, tuned.gains, plant, 5.0) == 0.0
    cm = rt.cost_matrix([plant], [tuned.gains], 5.0)
    assert cm.j == [[0.0]]


def test_discretize_degenerate_box_and_roundtrip(tmp_path):
    import numpy as np

    box = rt.DomainBox()
    box.name = "pt"
    box.lo = np.array([0.015, 0.2005, 0.025])
    box.hi = np.array([0.015, 0.2005, 0.025])
    box.axis_names = ["t_prop", "t_1", "tau"]
    box.make = lambda p: rt.inner_plant(rt.InnerParams(p[0], p[1], p[2], 1.0))

    spec = rt.TuningSpec()
    spec.restarts = 2
    dom = rt.discretize_inner(box, spec)
    assert [p.id for p in dom.processes] == ["pt-000"]
    assert dom.beta == 0.0
    assert dom.processes[0].margin_deg >= 19.5
    assert dom.processes[0].zeta > 0.0
    assert dom.find("pt-000") is not None
    assert dom.find("nope") is None

    rt.write_domain(str(tmp_path / "dom"), dom)
    back = rt.read_domain(str(tmp_path / "dom"), box.make)
    assert back.processes[0].controller.kp == dom.processes[0].controller.kp
    assert back.neighbors == dom.neighbors
    with pytest.raises(rt.DiscretizeError):
        rt.read_domain(str(tmp_path / "nowhere"))


def test_cascade_and_phase_search_on_builtin_boxes():
    att = rt.attitude_box()
    assert att.dims() == 3
    assert len(att.corners()) == 8
    assert att.contains(att.center())

    one = rt.DomainBox()
    one.name = "tiny"
    import numpy as np

    one.lo = np.array([0.1])
    one.hi = np.array([0.5])
    one.axis_names = ["t"]

    def split(p):
        return [rt.RationalBlock(num=[1.0], den=[1.0, p[0]])]

    cs = rt.build_cascade(split, one)
    assert [loop.factor_indices for loop in cs.loops] == [[0]]


def test_gain_estimate_and_harmonics():
    plant = rt.inner_plant(rt.InnerParams(t_prop=0.015, t_1=0.2005, tau=0.025, k_eq=1.0))
    z = rt.measure_zeta(plant, beta=-0.73, h=0.1)
    assert z.zeta > 0.0
    assert rt.estimate_gain(z.a0, z.h, z.zeta) == 1.0
    scaled = rt.scale_controller(rt.PDGains(kp=4.0, kd=0.5), 2.0)
    assert (scaled.kp, scaled.kd) == (2.0, 0.25)

    sim = rt.SimConfig()
    sim.duration = 60.0
    out = rt.run_relay_test(plant, rt.MRFTConfig(beta=-0.73, h=0.1), sim)
    hc = rt.harmonic_content(out.osc, 9)
    mag = hc.magnitude()
    assert mag[0] == pytest.approx(out.osc.a0, rel=0.1)
    assert mag[1] < 0.05 * mag[0]
    with pytest.raises(rt.GainError):
        rt.estimate_gain(-1.0, 0.1, z.zeta)
