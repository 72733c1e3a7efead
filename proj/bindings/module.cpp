#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "relaytune/discretize.hpp"
#include "relaytune/gain.hpp"
#include "relaytune/model.hpp"
#include "relaytune/mrft.hpp"
#include "relaytune/sim.hpp"
#include "relaytune/tuning.hpp"

namespace py = pybind11;
using namespace relaytune;

PYBIND11_MODULE(_core, m) {
  m.doc() = "relay-test identification and tuning core";
  m.attr("__version__") = "0.1.0";

  py::register_exception<ModelError>(m, "ModelError");
  py::register_exception<SimError>(m, "SimError");
  py::register_exception<MRFTError>(m, "MRFTError");
  py::register_exception<TuningError>(m, "TuningError");
  py::register_exception<GainError>(m, "GainError");
  py::register_exception<DiscretizeError>(m, "DiscretizeError");

  py::class_<InnerParams>(m, "InnerParams")
      .def(py::init([](double t_prop, double t_1, double tau, double k_eq) {
             return InnerParams{t_prop, t_1, tau, k_eq};
           }),
           py::arg("t_prop"), py::arg("t_1"), py::arg("tau"), py::arg("k_eq") = 1.0)
      .def_readwrite("t_prop", &InnerParams::t_prop)
      .def_readwrite("t_1", &InnerParams::t_1)
      .def_readwrite("tau", &InnerParams::tau)
      .def_readwrite("k_eq", &InnerParams::k_eq);

  py::class_<OuterParams>(m, "OuterParams")
      .def(py::init([](double t_2, double tau_side) {
             return OuterParams{t_2, tau_side};
           }),
           py::arg("t_2"), py::arg("tau_side"))
      .def_readwrite("t_2", &OuterParams::t_2)
      .def_readwrite("tau_side", &OuterParams::tau_side);

  py::class_<HarmonicBalance>(m, "HarmonicBalance")
      .def_readonly("omega0", &HarmonicBalance::omega0)
      .def_readonly("a0", &HarmonicBalance::a0);

  py::class_<RationalBlock>(m, "RationalBlock")
      .def(py::init([](std::vector<double> num, std::vector<double> den, double delay) {
             RationalBlock b;
             b.num = std::move(num);
             b.den = std::move(den);
             b.delay = delay;
             b.validate();
             return b;
           }),
           py::arg("num"), py::arg("den"), py::arg("delay") = 0.0)
      .def_readwrite("num", &RationalBlock::num)
      .def_readwrite("den", &RationalBlock::den)
      .def_readwrite("delay", &RationalBlock::delay)
      .def("order", &RationalBlock::order)
      .def("relative_degree", &RationalBlock::relative_degree);

  py::class_<BlockDiagram>(m, "BlockDiagram")
      .def_static("leaf", &BlockDiagram::leaf, py::arg("block"))
      .def_static("pd", &BlockDiagram::pd, py::arg("gains"))
      .def_static("series",
                  [](std::vector<BlockDiagram> kids) {
                    return BlockDiagram::series(std::move(kids));
                  },
                  py::arg("children"))
      .def_static("feedback", &BlockDiagram::feedback, py::arg("controller"),
                  py::arg("plant"));

  py::class_<PIGains>(m, "PIGains")
      .def(py::init([](double kp, double ki) { return PIGains{kp, ki}; }), py::arg("kp"),
           py::arg("ki"))
      .def_readwrite("kp", &PIGains::kp)
      .def_readwrite("ki", &PIGains::ki);

  m.def("inner_plant", &inner_plant, py::arg("params"));
  m.def("side_chain", &side_chain, py::arg("params"), py::arg("k_side") = 1.0);
  m.def("yaw_plant", &yaw_plant, py::arg("t_prop"), py::arg("tau"), py::arg("k_eq") = 1.0);
  m.def(
      "outer_plant",
      [](const InnerParams& inner, const PDGains& att, const OuterParams& outer) {
        return outer_plant(BlockDiagram::feedback(BlockDiagram::pd(att), inner_plant(inner)),
                           outer);
      },
      py::arg("inner"), py::arg("attitude_gains"), py::arg("outer"));

  py::class_<PDGains>(m, "PDGains")
      .def(py::init([](double kp, double kd) { return PDGains{kp, kd}; }), py::arg("kp"),
           py::arg("kd"))
      .def_readwrite("kp", &PDGains::kp)
      .def_readwrite("kd", &PDGains::kd);

  m.def(
      "freq_response",
      [](const BlockDiagram& d, double omega) {
        auto g = freq_response(d, omega);
        return std::make_pair(g.real(), g.imag());
      },
      py::arg("diagram"), py::arg("omega"));

  m.def(
      "solve_harmonic_balance",
      [](const BlockDiagram& plant, double beta, double h) -> py::object {
        auto hb = solve_harmonic_balance(plant, beta, h);
        if (!hb) return py::none();
        return py::cast(*hb);
      },
      py::arg("plant"), py::arg("beta"), py::arg("h"));

  py::class_<SimConfig>(m, "SimConfig")
      .def(py::init<>())
      .def_readwrite("internal_step", &SimConfig::internal_step)
      .def_readwrite("log_step", &SimConfig::log_step)
      .def_readwrite("duration", &SimConfig::duration)
      .def_readwrite("noise_sigma", &SimConfig::noise_sigma)
      .def_readwrite("bias", &SimConfig::bias)
      .def_readwrite("seed", &SimConfig::seed)
      .def_readwrite("divergence_guard", &SimConfig::divergence_guard);

  py::class_<TimeSeries>(m, "TimeSeries")
      .def_readonly("dt", &TimeSeries::dt)
      .def_readonly("t", &TimeSeries::t)
      .def_readonly("r", &TimeSeries::r)
      .def_readonly("pv", &TimeSeries::pv)
      .def_readonly("u", &TimeSeries::u);

  py::class_<MRFTConfig>(m, "MRFTConfig")
      .def(py::init([](double beta, double h) { return MRFTConfig{beta, h}; }),
           py::arg("beta"), py::arg("h"))
      .def_readwrite("beta", &MRFTConfig::beta)
      .def_readwrite("h", &MRFTConfig::h);

  py::class_<OscillationRecord>(m, "OscillationRecord")
      .def_readonly("a0", &OscillationRecord::a0)
      .def_readonly("omega0", &OscillationRecord::omega0)
      .def_readonly("period", &OscillationRecord::period)
      .def_readonly("t_high", &OscillationRecord::t_high)
      .def_readonly("t_low", &OscillationRecord::t_low)
      .def_readonly("dt", &OscillationRecord::dt)
      .def_readonly("pv", &OscillationRecord::pv)
      .def_readonly("u", &OscillationRecord::u)
      .def_readonly("steady", &OscillationRecord::steady);

  py::class_<MRFTOutcome>(m, "MRFTOutcome")
      .def_readonly("ts", &MRFTOutcome::ts)
      .def_readonly("osc", &MRFTOutcome::osc);

  m.def("run_relay_test", &run_relay_test, py::arg("plant"), py::arg("mrft"),
        py::arg("sim"));
  m.def(
      "detect_steady_oscillation",
      [](const TimeSeries& ts) -> py::object {
        auto osc = detect_steady_oscillation(ts);
        if (!osc) return py::none();
        return py::cast(*osc);
      },
      py::arg("ts"));
  m.def("preprocess_to_input", &preprocess_to_input, py::arg("osc"), py::arg("n_s"));

  py::class_<TuningSpec>(m, "TuningSpec")
      .def(py::init<>())
      .def_readwrite("min_margin_deg", &TuningSpec::min_margin_deg)
      .def_readwrite("t_s", &TuningSpec::t_s)
      .def_readwrite("restarts", &TuningSpec::restarts)
      .def_readwrite("init", &TuningSpec::init);

  py::class_<TunedPD>(m, "TunedPD")
      .def_readonly("gains", &TunedPD::gains)
      .def_readonly("q", &TunedPD::q)
      .def_readonly("margin_deg", &TunedPD::margin_deg)
      .def_readonly("t_s", &TunedPD::t_s);

  py::class_<CostMatrix>(m, "CostMatrix")
      .def_readonly("j", &CostMatrix::j)
      .def_readonly("jmax", &CostMatrix::jmax);

  m.def("optimize_pd", &optimize_pd, py::arg("plant"), py::arg("spec") = TuningSpec{});
  m.def("deterioration", &deterioration, py::arg("c_i"), py::arg("c_j"), py::arg("g_j"),
        py::arg("t_s"));
  m.def("cost_matrix",
        static_cast<CostMatrix (*)(const std::vector<BlockDiagram>&,
                                   const std::vector<PDGains>&, double)>(&cost_matrix),
        py::arg("processes"), py::arg("controllers"), py::arg("t_s"));
  m.def("cost_matrix",
        static_cast<CostMatrix (*)(const std::vector<BlockDiagram>&,
                                   const std::vector<PDGains>&,
                                   const std::vector<double>&)>(&cost_matrix),
        py::arg("processes"), py::arg("controllers"), py::arg("t_s"));
  m.def("ise_unit_step", &ise_unit_step, py::arg("gains"), py::arg("plant"), py::arg("t_s"),
        py::arg("internal_step") = 1e-4, py::arg("divergence_guard") = 1e6);
  m.def(
      "loop_margins",
      [](const PDGains& c, const BlockDiagram& plant) -> py::object {
        auto mg = loop_margins(c, plant);
        if (!mg) return py::none();
        return py::make_tuple(mg->omega_crossover, mg->phase_margin_deg);
      },
      py::arg("gains"), py::arg("plant"));

  py::class_<ZetaRecord>(m, "ZetaRecord")
      .def_readonly("zeta", &ZetaRecord::zeta)
      .def_readonly("a0", &ZetaRecord::a0)
      .def_readonly("h", &ZetaRecord::h)
      .def_readonly("omega0", &ZetaRecord::omega0);
  m.def("measure_zeta", &measure_zeta, py::arg("unit_plant"), py::arg("beta"),
        py::arg("h") = 0.1, py::arg("duration") = 300.0);
  m.def("zeta_df", &zeta_df, py::arg("unit_plant"), py::arg("beta"));
  m.def("estimate_gain", &estimate_gain, py::arg("a0_meas"), py::arg("h_meas"),
        py::arg("zeta"));
  m.def("scale_controller", &scale_controller, py::arg("c_norm"), py::arg("k_hat"));
  py::class_<HarmonicContent>(m, "HarmonicContent")
      .def_readonly("dc", &HarmonicContent::dc)
      .def_readonly("omega0", &HarmonicContent::omega0)
      .def_readonly("cos_coef", &HarmonicContent::cos_coef)
      .def_readonly("sin_coef", &HarmonicContent::sin_coef)
      .def("magnitude", &HarmonicContent::magnitude)
      .def("eval", &HarmonicContent::eval, py::arg("t"));
  m.def("harmonic_content", &harmonic_content, py::arg("osc"), py::arg("n_max"));

  py::class_<ZetaTable>(m, "ZetaTable")
      .def_readonly("class_ids", &ZetaTable::class_ids)
      .def_readonly("rows", &ZetaTable::rows);

  py::class_<DomainBox>(m, "DomainBox")
      .def(py::init<>())
      .def_readwrite("name", &DomainBox::name)
      .def_readwrite("lo", &DomainBox::lo)
      .def_readwrite("hi", &DomainBox::hi)
      .def_readwrite("axis_names", &DomainBox::axis_names)
      .def_readwrite("make", &DomainBox::make)
      .def("dims", &DomainBox::dims)
      .def("center", &DomainBox::center)
      .def("corners", &DomainBox::corners)
      .def("contains", &DomainBox::contains, py::arg("p"), py::arg("rel_tol") = 1e-9);
  m.def("attitude_box", &attitude_box);
  m.def("altitude_box", &altitude_box);
  m.def("side_box", &side_box);

  py::class_<PhaseSearch>(m, "PhaseSearch")
      .def(py::init<>())
      .def_readwrite("grid_points", &PhaseSearch::grid_points)
      .def_readwrite("beta_lo", &PhaseSearch::beta_lo)
      .def_readwrite("beta_hi", &PhaseSearch::beta_hi)
      .def_readwrite("tuning", &PhaseSearch::tuning);
  py::class_<PhaseResult>(m, "PhaseResult")
      .def_readonly("phi_d", &PhaseResult::phi_d)
      .def_readonly("beta", &PhaseResult::beta)
      .def_readonly("worst_pct", &PhaseResult::worst_pct);
  m.def("find_distinguishing_phase", &find_distinguishing_phase, py::arg("box"),
        py::arg("search") = PhaseSearch{}, py::call_guard<py::gil_scoped_release>());

  py::class_<CascadeLoop>(m, "CascadeLoop")
      .def_readonly("factor_indices", &CascadeLoop::factor_indices);
  py::class_<CascadeStructure>(m, "CascadeStructure")
      .def_readonly("loops", &CascadeStructure::loops);
  py::class_<CascadeProbe>(m, "CascadeProbe")
      .def(py::init<>())
      .def_readwrite("h", &CascadeProbe::h)
      .def_readwrite("beta", &CascadeProbe::beta)
      .def_readwrite("a0_max", &CascadeProbe::a0_max)
      .def_readwrite("omega0_min", &CascadeProbe::omega0_min)
      .def_readwrite("re_tol", &CascadeProbe::re_tol)
      .def_readwrite("tuning", &CascadeProbe::tuning);
  m.def("build_cascade", &build_cascade, py::arg("split"), py::arg("box"),
        py::arg("probe") = CascadeProbe{}, py::call_guard<py::gil_scoped_release>());

  py::class_<DiscreteProcess>(m, "DiscreteProcess")
      .def_readonly("id", &DiscreteProcess::id)
      .def_readonly("params", &DiscreteProcess::params)
      .def_readonly("controller", &DiscreteProcess::controller)
      .def_readonly("q", &DiscreteProcess::q)
      .def_readonly("margin_deg", &DiscreteProcess::margin_deg)
      .def_readonly("t_s", &DiscreteProcess::t_s)
      .def_readonly("zeta", &DiscreteProcess::zeta)
      .def_readonly("a0", &DiscreteProcess::a0)
      .def_readonly("omega0", &DiscreteProcess::omega0)
      .def_readonly("clamped", &DiscreteProcess::clamped);
  py::class_<DiscretizedDomain>(m, "DiscretizedDomain")
      .def_readonly("name", &DiscretizedDomain::name)
      .def_readonly("axis_names", &DiscretizedDomain::axis_names)
      .def_readonly("processes", &DiscretizedDomain::processes)
      .def_readonly("phi_d", &DiscretizedDomain::phi_d)
      .def_readonly("beta", &DiscretizedDomain::beta)
      .def_readonly("n_s", &DiscretizedDomain::n_s)
      .def_readonly("table_h", &DiscretizedDomain::table_h)
      .def_readonly("parent_id", &DiscretizedDomain::parent_id)
      .def_readonly("neighbors", &DiscretizedDomain::neighbors)
      .def_readonly("costs", &DiscretizedDomain::costs)
      .def_readwrite("make", &DiscretizedDomain::make)
      .def("find", [](const DiscretizedDomain& d, const std::string& id) -> py::object {
        const DiscreteProcess* p = d.find(id);
        if (!p) return py::none();
        return py::cast(*p);
      }, py::arg("id"));

  m.def("discretize_inner", &discretize_inner, py::arg("box"),
        py::arg("spec") = TuningSpec{}, py::arg("j_star") = 10.0, py::arg("tol") = 3.0,
        py::call_guard<py::gil_scoped_release>());
  m.def("discretize_outer", &discretize_outer, py::arg("inner"), py::arg("side_template"),
        py::arg("spec") = TuningSpec{}, py::arg("j_star") = 10.0, py::arg("tol") = 3.0,
        py::arg("inner_subset") = std::vector<int>{},
        py::call_guard<py::gil_scoped_release>());
  m.def("compute_zeta_table", &compute_zeta_table, py::arg("domain"), py::arg("h") = 0.1,
        py::call_guard<py::gil_scoped_release>());
  m.def("write_domain", &write_domain, py::arg("dir"), py::arg("domain"));
  m.def("read_domain", &read_domain, py::arg("dir"),
        py::arg("make") = std::function<BlockDiagram(const Eigen::VectorXd&)>{});
}
