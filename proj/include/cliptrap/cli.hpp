#ifndef CLIPTRAP_CLI_HPP
#define CLIPTRAP_CLI_HPP

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cliptrap/cloud.hpp"
#include "cliptrap/constants.hpp"
#include "cliptrap/dynamics.hpp"
#include "cliptrap/errors.hpp"
#include "cliptrap/estimation.hpp"
#include "cliptrap/io/csv.hpp"
#include "cliptrap/io/keyvalue.hpp"
#include "cliptrap/species.hpp"
#include "cliptrap/sweeps.hpp"

namespace cliptrap::cli {

inline constexpr std::uint64_t default_seed = 1;

inline constexpr int exit_ok = 0;
inline constexpr int exit_input_error = 2;
inline constexpr int exit_numerical_error = 3;

// Same content as docs/paper_defaults.cfg.
inline constexpr const char* paper_defaults_config = R"(species = Cr52
radial_gradient_G_per_cm = 12.5
axial_curvature_G_per_cm2 = 10.5
offset_field_mG = 0
eta = 0.3
beta_ed_cm3_per_s = 6e-10
beta_dd_cm3_per_s = 1.3e-11
gamma_d_per_s = 0
n_mot = 5e6
mot_saturation = inf
mot_detuning_linewidths = -2
mot_temperature_uK = 140
mot_sigma_radial_mm = 0.1
mot_sigma_axial_mm = 0.1
mt_temperature_uK = 100
include_gravity = true
v_eff_mode = approximate
)";

inline const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys{
      "species", "species_file", "radial_gradient_G_per_cm", "axial_curvature_G_per_cm2", "offset_field_mG",
      "eta", "beta_ed_cm3_per_s", "beta_dd_cm3_per_s", "gamma_d_per_s", "n_mot", "mot_saturation",
      "mot_detuning_linewidths", "mot_temperature_uK", "mot_sigma_radial_mm", "mot_sigma_axial_mm",
      "mt_temperature_uK", "v_mt_cm3", "v_eff_cm3", "include_gravity", "v_eff_mode", "t_end_s", "samples",
      "n0_atoms", "sweep_parameter", "sweep_values", "sweep_outputs", "sweep_n_mot_file", "synth_kind", "noise",
      "synth_samples", "synth_t_end_s", "synth_n0_atoms", "fit_window_s", "decay_volume_cm3", "seed"};
  return keys;
}

// Layered key-value configuration plus the resolved seed.
struct RunConfig {
  io::KeyValueConfig values;
  std::uint64_t seed = default_seed;

  void validate() const {
    for (const auto& [k, v] : values.values()) {
      if (!known_keys().count(k)) throw InputError("unknown config key '" + k + "'");
    }
    for (const char* key : {"species_file", "sweep_n_mot_file"}) {
      if (values.has(key) && !std::filesystem::is_regular_file(values.get_string(key))) {
        throw InputError("config key '" + std::string(key) + "': file '" + values.get_string(key) + "' does not exist");
      }
    }
  }
};

namespace detail {

inline double positive(const io::KeyValueConfig& c, const std::string& key) {
  const double v = c.get_double(key);
  if (!(v > 0.0)) throw InputError("config key '" + key + "' must be > 0");
  return v;
}

inline double non_negative(const io::KeyValueConfig& c, const std::string& key, double fallback) {
  const double v = c.get_double(key, fallback);
  if (!(v >= 0.0)) throw InputError("config key '" + key + "' must be >= 0");
  return v;
}

inline double positive_or(const io::KeyValueConfig& c, const std::string& key, double fallback) {
  return c.has(key) ? positive(c, key) : fallback;
}

inline std::size_t count(const io::KeyValueConfig& c, const std::string& key, std::size_t fallback) {
  const double v = c.get_double(key, static_cast<double>(fallback));
  if (!(v >= 0.0) || v != std::floor(v) || v > 1e9) throw InputError("config key '" + key + "' must be a count");
  return static_cast<std::size_t>(v);
}

}  // namespace detail

inline Species species_from_run_config(const io::KeyValueConfig& c) {
  if (c.has("species_file")) return species_from_config(io::KeyValueConfig::parse_file(c.get_string("species_file")));
  const std::string name = c.get_string("species", "Cr52");
  if (name == "Cr52") return chromium_52();
  throw InputError("config key 'species': unknown builtin species '" + name + "'");
}

inline IpTrapConfig trap_from_run_config(const io::KeyValueConfig& c) {
  IpTrapConfig t;
  t.radial_gradient = gauss_per_cm_to_si(detail::positive(c, "radial_gradient_G_per_cm"));
  t.axial_curvature = gauss_per_cm2_to_si(detail::positive(c, "axial_curvature_G_per_cm2"));
  t.offset_field = milligauss_to_si(c.get_double("offset_field_mG", 0.0));
  t.background_loss_rate = detail::non_negative(c, "gamma_d_per_s", 0.0);
  return t;
}

inline GeometryOptions geometry_from_run_config(const io::KeyValueConfig& c) {
  GeometryOptions g;
  g.include_gravity = c.get_bool("include_gravity", true);
  const std::string mode = c.get_string("v_eff_mode", "approximate");
  if (mode == "approximate") {
    g.v_eff_mode = EffectiveVolumeMode::approximate;
  } else if (mode == "overlap") {
    g.v_eff_mode = EffectiveVolumeMode::overlap;
  } else {
    throw InputError("config key 'v_eff_mode' must be 'approximate' or 'overlap', got '" + mode + "'");
  }
  return g;
}

// Scenario without volumes; mt_temperature defaults to the thermalized
// prediction from the MOT temperature.
inline LoadingScenario scenario_skeleton(const io::KeyValueConfig& c) {
  LoadingScenario s;
  s.species = species_from_run_config(c);
  s.trap = trap_from_run_config(c);
  s.coefficients.eta = c.get_double("eta");
  if (!(s.coefficients.eta >= 0.0 && s.coefficients.eta <= 1.0)) throw InputError("config key 'eta' must lie in [0, 1]");
  s.coefficients.beta_ed = cm3_to_si(detail::non_negative(c, "beta_ed_cm3_per_s", 0.0));
  s.coefficients.beta_dd = cm3_to_si(detail::non_negative(c, "beta_dd_cm3_per_s", 0.0));
  s.coefficients.gamma_d = s.trap.background_loss_rate;
  s.mot.n_mot = c.get_double("n_mot");
  if (!(s.mot.n_mot >= 0.0)) throw InputError("config key 'n_mot' must be >= 0");
  s.mot.total_saturation = detail::non_negative(c, "mot_saturation", HUGE_VAL);
  s.mot.detuning = c.get_double("mot_detuning_linewidths", 0.0) * s.species.gamma_eg;
  s.mot.temperature = microkelvin_to_si(detail::positive(c, "mot_temperature_uK"));
  s.mot.sigma_radial = mm_to_si(detail::positive(c, "mot_sigma_radial_mm"));
  s.mot.sigma_axial = mm_to_si(detail::positive(c, "mot_sigma_axial_mm"));
  s.mt_temperature = c.has("mt_temperature_uK") ? microkelvin_to_si(detail::positive(c, "mt_temperature_uK"))
                                                 : mt_temperature_prediction(s.mot.temperature, true).axial;
  return s;
}

// Volumes are taken from v_mt_cm3 / v_eff_cm3 when given, otherwise
// computed from the thermal cloud.
inline LoadingScenario scenario_from_run_config(const io::KeyValueConfig& c) {
  LoadingScenario s = scenario_skeleton(c);
  if (c.has("v_mt_cm3")) {
    s.v_mt = cm3_to_si(detail::positive(c, "v_mt_cm3"));
    s.v_eff = c.has("v_eff_cm3") ? cm3_to_si(detail::positive(c, "v_eff_cm3")) : s.v_mt;
  } else {
    s = with_cloud_geometry(s, geometry_from_run_config(c));
    if (c.has("v_eff_cm3")) s.v_eff = cm3_to_si(detail::positive(c, "v_eff_cm3"));
  }
  s.validate();
  return s;
}

// quantity,value,unit rows.
inline std::string cmd_predict(const RunConfig& cfg) {
  const LoadingScenario s = scenario_from_run_config(cfg.values);
  const SweepPoint p = evaluate_scenario(s);
  const ThermalCloud flat = thermal_cloud_shape(s.species, s.trap, s.mt_temperature, false);
  const auto per_axis = mt_temperature_prediction(s.mot.temperature, false);

  io::CsvTable t;
  t.columns = {"quantity", "value", "unit"};
  auto row = [&](const std::string& q, double v, const std::string& unit) {
    t.add_row({q, io::format_double(v), unit});
  };
  row("loading_rate", p.loading_rate, "atoms/s");
  row("excited_mot_atoms", excited_mot_atoms(s), "atoms");
  row("gamma_ed", p.gamma_ed, "1/s");
  row("gamma_total", total_one_body_loss(s), "1/s");
  row("v_mt", si_to_cm3(s.v_mt), "cm3");
  row("v_mt_closed_form", si_to_cm3(occupied_volume_closed_form(flat)), "cm3");
  row("v_eff", si_to_cm3(s.v_eff), "cm3");
  row("n_mt_steady", p.n_mt_steady, "atoms");
  row("kappa", p.kappa, "1");
  row("kappa_abscissa", si_to_cm3(p.kappa_abscissa), "cm3/s");
  row("tau_eff", p.tau_eff, "s");
  row("mt_temperature", si_to_microkelvin(s.mt_temperature), "uK");
  row("t_mt_prediction_thermalized", si_to_microkelvin(p.t_mt_prediction), "uK");
  row("t_mt_prediction_axial", si_to_microkelvin(per_axis.axial), "uK");
  row("t_mt_prediction_radial", si_to_microkelvin(per_axis.radial), "uK");
  t.add_row({"majorana_safe", p.majorana_safe ? "true" : "false", "bool"});
  return io::to_string(t);
}

inline std::string cmd_simulate(const RunConfig& cfg) {
  const LoadingScenario s = scenario_from_run_config(cfg.values);
  const double t_end = cfg.values.get_double("t_end_s", 10.0);
  if (!(t_end > 0.0)) throw InputError("config key 't_end_s' must be > 0");
  const std::size_t samples = detail::count(cfg.values, "samples", 201);
  if (samples < 2) throw InputError("config key 'samples' must be at least 2");
  const double n0 = detail::non_negative(cfg.values, "n0_atoms", 0.0);
  const TimeSeries ts = evolve(s, n0, t_end, samples);
  io::CsvTable t;
  t.columns = {"t_s", "n_atoms"};
  for (std::size_t i = 0; i < ts.t.size(); ++i) t.add_row(std::vector<double>{ts.t[i], ts.n[i]});
  return io::to_string(t);
}

struct OutputColumn {
  SweepOutput output;
  const char* key;     // name in sweep_outputs
  const char* column;  // CSV header
  double (*from_si)(double);
};

inline double identity(double v) { return v; }

inline const std::vector<OutputColumn>& output_columns() {
  static const std::vector<OutputColumn> cols{
      {SweepOutput::n_mot, "n_mot", "n_mot_atoms", identity},
      {SweepOutput::n_mt_steady, "n_mt_steady", "n_mt_steady_atoms", identity},
      {SweepOutput::loading_rate, "loading_rate", "loading_rate_atoms_per_s", identity},
      {SweepOutput::tau_eff, "tau_eff", "tau_eff_s", identity},
      {SweepOutput::v_mt, "v_mt", "v_mt_cm3", [](double v) { return si_to_cm3(v); }},
      {SweepOutput::kappa, "kappa", "kappa", identity},
      {SweepOutput::kappa_abscissa, "kappa_abscissa", "kappa_abscissa_cm3_per_s", [](double v) { return si_to_cm3(v); }},
      {SweepOutput::t_mt_prediction, "t_mt_prediction", "t_mt_prediction_uK",
       [](double v) { return si_to_microkelvin(v); }},
      {SweepOutput::majorana_safe, "majorana_safe", "majorana_safe", identity},
  };
  return cols;
}

inline const OutputColumn& output_column(SweepOutput o) {
  for (const auto& c : output_columns()) {
    if (c.output == o) return c;
  }
  throw InputError("unknown sweep output");
}

struct SweptColumn {
  SweptParameter parameter;
  const char* key;
  const char* column;
  double (*to_si)(double);
  double (*from_si)(double);
};

inline const std::vector<SweptColumn>& swept_columns() {
  static const std::vector<SweptColumn> cols{
      {SweptParameter::radial_gradient, "radial_gradient", "radial_gradient_G_per_cm",
       [](double v) { return gauss_per_cm_to_si(v); }, [](double v) { return si_to_gauss_per_cm(v); }},
      {SweptParameter::axial_curvature, "axial_curvature", "axial_curvature_G_per_cm2",
       [](double v) { return gauss_per_cm2_to_si(v); }, [](double v) { return si_to_gauss_per_cm2(v); }},
      {SweptParameter::offset_field, "offset_field", "offset_field_mG",
       [](double v) { return milligauss_to_si(v); }, [](double v) { return si_to_milligauss(v); }},
  };
  return cols;
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = io::trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

inline SweepSpec sweep_spec_from_run_config(const io::KeyValueConfig& c) {
  SweepSpec spec;
  const std::string name = c.get_string("sweep_parameter");
  const SweptColumn* swept = nullptr;
  for (const auto& col : swept_columns()) {
    if (name == col.key) swept = &col;
  }
  if (!swept) throw InputError("config key 'sweep_parameter': unknown parameter '" + name + "'");
  spec.parameter = swept->parameter;

  if (c.has("sweep_outputs")) {
    for (const auto& key : split_list(c.get_string("sweep_outputs"))) {
      bool found = false;
      for (const auto& col : output_columns()) {
        if (key == col.key) {
          spec.outputs.push_back(col.output);
          found = true;
        }
      }
      if (!found) throw InputError("config key 'sweep_outputs': unknown output '" + key + "'");
    }
  } else {
    for (const auto& col : output_columns()) spec.outputs.push_back(col.output);
  }

  std::vector<double> boundary_values;
  if (c.has("sweep_values")) boundary_values = c.get_double_list("sweep_values");

  if (c.has("sweep_n_mot_file")) {
    const std::string path = c.get_string("sweep_n_mot_file");
    const io::CsvTable t = io::read_csv_file(path);
    const auto keys = t.numbers(swept->column, path);
    const auto n = t.numbers("n_mot_atoms", path);
    if (boundary_values.empty()) boundary_values = keys;
    for (double v : boundary_values) {
      std::optional<double> match;
      for (std::size_t i = 0; i < keys.size(); ++i) {
        if (std::abs(keys[i] - v) <= 1e-9 * std::max(std::abs(v), 1.0)) match = n[i];
      }
      if (!match) {
        throw InputError("config key 'sweep_n_mot_file': no row for " + std::string(swept->column) + " = " +
                         io::format_double(v) + " in '" + path + "'");
      }
      spec.n_mot.push_back(*match);
    }
  }
  if (boundary_values.empty()) throw InputError("config key 'sweep_values' is missing or empty");
  for (double v : boundary_values) spec.values.push_back(swept->to_si(v));

  // Volumes are rebuilt per point, so only the skeleton is needed here.
  spec.base = scenario_skeleton(c);
  spec.geometry = geometry_from_run_config(c);
  return spec;
}

inline io::CsvTable sweep_table(const SweepResult& r) {
  const SweptColumn* swept = nullptr;
  for (const auto& col : swept_columns()) {
    if (col.parameter == r.parameter) swept = &col;
  }
  io::CsvTable t;
  t.columns.push_back(swept->column);
  for (auto o : r.outputs) t.columns.push_back(output_column(o).column);
  t.columns.push_back("error");
  for (const auto& p : r.points) {
    std::vector<std::string> row{io::format_double(swept->from_si(p.value))};
    for (auto o : r.outputs) row.push_back(io::format_double(output_column(o).from_si(p.get(o))));
    row.push_back(io::sanitize_cell(p.error));
    t.add_row(std::move(row));
  }
  return t;
}

inline std::string cmd_sweep(const RunConfig& cfg, SweepResult* result = nullptr) {
  SweepResult r = run_sweep(sweep_spec_from_run_config(cfg.values));
  std::string text = io::to_string(sweep_table(r));
  if (result) *result = std::move(r);
  return text;
}

inline const std::vector<std::string>& synth_kinds() {
  static const std::vector<std::string> kinds{"loading_curve", "decay_curve", "tof_series", "kappa_points",
                                              "column_profile"};
  return kinds;
}

inline std::string cmd_synth(const RunConfig& cfg) {
  const auto& c = cfg.values;
  const std::string kind = c.get_string("synth_kind", "kappa_points");
  const double noise = detail::non_negative(c, "noise", 0.1);
  const LoadingScenario s = scenario_from_run_config(c);

  io::CsvTable t;
  t.comments.push_back("synth " + kind + " noise=" + io::format_double(noise) + " seed=" + std::to_string(cfg.seed));
  if (kind == "column_profile") {
    const ColumnImage img = synthesize_column_image(s, noise, cfg.seed, 41, geometry_from_run_config(c).include_gravity);
    t.columns = {"y_mm", "z_mm", "column_density_per_cm2", "sigma_per_cm2"};
    for (std::size_t i = 0; i < img.size(); ++i) {
      t.add_row(std::vector<double>{si_to_mm(img.y[i]), si_to_mm(img.z[i]), si_to_per_cm2(img.value[i]),
                                    si_to_per_cm2(img.sigma[i])});
    }
    return io::to_string(t);
  }

  MeasurementKind mk{};
  double y_factor = 1.0;
  double x_factor = 1.0;
  if (kind == "loading_curve" || kind == "decay_curve") {
    mk = kind == "loading_curve" ? MeasurementKind::loading_curve : MeasurementKind::decay_curve;
    t.columns = {"t_s", "n_atoms", "sigma_atoms"};
  } else if (kind == "tof_series") {
    mk = MeasurementKind::tof_series;
    t.columns = {"t_s", "sigma_mm", "sigma_err_mm"};
    y_factor = 1e3;
  } else if (kind == "kappa_points") {
    mk = MeasurementKind::kappa_points;
    t.columns = {"kappa_abscissa_cm3_per_s", "kappa", "kappa_sigma"};
    x_factor = 1e6;
  } else {
    throw InputError("config key 'synth_kind': unknown kind '" + kind + "'");
  }
  SynthOptions opt;
  opt.samples = detail::count(c, "synth_samples", 0);
  opt.t_end = detail::non_negative(c, "synth_t_end_s", 0.0);
  if (c.has("synth_n0_atoms")) opt.n0 = detail::non_negative(c, "synth_n0_atoms", 0.0);
  const DataSet d = synthesize_measurements(s, mk, noise, cfg.seed, opt);
  for (std::size_t i = 0; i < d.size(); ++i) {
    t.add_row(std::vector<double>{d.x[i] * x_factor, d.y[i] * y_factor, d.sigma[i] * y_factor});
  }
  return io::to_string(t);
}

struct ReportParameter {
  const char* name;
  double factor;  // SI -> boundary units
  const char* unit;
};

// parameter,value,sigma,unit rows, then the correlation matrix as a block.
inline std::string fit_report(const std::string& kind, const FitResult& f, const std::vector<ReportParameter>& params,
                              std::size_t rows) {
  std::ostringstream out;
  out << "# fit " << kind << '\n';
  out << "# rows=" << rows << " dof=" << f.dof << " chi2=" << io::format_double(f.chi2)
      << " iterations=" << f.iterations << " converged=" << (f.converged ? "true" : "false") << '\n';
  io::CsvTable t;
  t.columns = {"parameter", "value", "sigma", "unit"};
  for (const auto& p : params) {
    t.add_row({p.name, io::format_double(f.value(p.name) * p.factor), io::format_double(f.sigma(p.name) * p.factor),
               p.unit});
  }
  io::write_csv(out, t);
  out << "# correlation\n";
  io::CsvTable c;
  c.columns.push_back("correlation");
  for (const auto& p : params) c.columns.push_back(p.name);
  for (const auto& a : params) {
    std::vector<std::string> row{a.name};
    for (const auto& b : params) row.push_back(io::format_double(f.correlation_of(a.name, b.name)));
    c.add_row(std::move(row));
  }
  io::write_csv(out, c);
  return out.str();
}

inline const std::vector<std::string>& fit_kinds() {
  static const std::vector<std::string> kinds{"loading-rate", "kappa", "decay", "tof", "profile"};
  return kinds;
}

// Returns the report; *converged is false when the fitter hit its limits.
inline std::string cmd_fit(const RunConfig& cfg, const std::string& kind, const std::string& in_path,
                           bool* converged = nullptr) {
  const io::CsvTable t = io::read_csv_file(in_path);
  const auto& c = cfg.values;
  bool has_sigma = false;
  FitResult f;
  std::string report;
  if (kind == "loading-rate") {
    const DataSet d = io::dataset_from_csv(t, {"t_s", "n_atoms", "", 1.0, 1.0}, in_path);
    f = fit_loading_rate(d, detail::positive_or(c, "fit_window_s", default_loading_window));
    report = fit_report(kind, f, {{"loading_rate", 1.0, "atoms/s"}, {"intercept", 1.0, "atoms"}}, d.size());
  } else if (kind == "kappa") {
    const DataSet d = io::dataset_from_csv(t, {"kappa_abscissa_cm3_per_s", "kappa", "kappa_sigma", 1e-6, 1.0}, in_path,
                                           &has_sigma);
    KappaFitOptions opt;
    opt.lsq.scale_covariance = !has_sigma;
    f = fit_kappa(d, opt);
    report = fit_report(kind, f, {{"beta_dd", 1e6, "cm3/s"}, {"beta_ed", 1e6, "cm3/s"}}, d.size());
  } else if (kind == "decay") {
    const DataSet d = io::dataset_from_csv(t, {"t_s", "n_atoms", "sigma_atoms", 1.0, 1.0}, in_path, &has_sigma);
    const double v = c.has("decay_volume_cm3") ? cm3_to_si(detail::positive(c, "decay_volume_cm3"))
                                               : scenario_from_run_config(c).v_mt;
    DecayFitOptions opt;
    opt.lsq.scale_covariance = !has_sigma;
    f = fit_decay(d, v, opt);
    report = fit_report(kind, f, {{"n0", 1.0, "atoms"}, {"gamma", 1.0, "1/s"}, {"beta_dd", 1e6, "cm3/s"}}, d.size());
  } else if (kind == "tof") {
    const DataSet d = io::dataset_from_csv(t, {"t_s", "sigma_mm", "sigma_err_mm", 1.0, 1e-3}, in_path, &has_sigma);
    TofFit tf = fit_tof(d, species_from_run_config(c));
    f = tf.fit;
    report = fit_report(kind, f, {{"sigma0", 1e3, "mm"}, {"temperature", 1e6, "uK"}}, d.size());
  } else if (kind == "profile") {
    ColumnImage img;
    if (!t.rows.empty()) {
      const auto y = t.numbers("y_mm", in_path);
      const auto z = t.numbers("z_mm", in_path);
      const auto v = t.numbers("column_density_per_cm2", in_path);
      std::vector<double> s(y.size(), 1.0);
      has_sigma = t.find("sigma_per_cm2").has_value();
      if (has_sigma) s = t.numbers("sigma_per_cm2", in_path);
      for (std::size_t i = 0; i < y.size(); ++i) {
        img.add(mm_to_si(y[i]), mm_to_si(z[i]), per_cm2_to_si(v[i]), has_sigma ? per_cm2_to_si(s[i]) : 1.0);
      }
    }
    ProfileFitOptions opt;
    opt.include_gravity = geometry_from_run_config(c).include_gravity;
    opt.lsq.scale_covariance = !has_sigma;
    if (c.has("mt_temperature_uK")) opt.temperature_initial = microkelvin_to_si(detail::positive(c, "mt_temperature_uK"));
    f = fit_column_profile(img, species_from_run_config(c), trap_from_run_config(c), opt);
    report = fit_report(kind, f,
                        {{"n0", 1e-6, "1/cm3"}, {"temperature", 1e6, "uK"}, {"center_y", 1e3, "mm"},
                         {"center_z", 1e3, "mm"}},
                        img.size());
  } else {
    throw InputError("unknown fit kind '" + kind + "'");
  }
  if (converged) *converged = f.converged;
  return report;
}

namespace detail {

inline void emit(const std::string& text, const std::string& out_path, std::ostream& out) {
  if (out_path.empty()) {
    out << text;
  } else {
    io::write_file_atomic(out_path, text);
  }
}

}  // namespace detail

// Entry point shared by the executable and the tests. Returns the exit code.
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Continuous loading of a magnetic trap from a MOT: prediction, simulation, sweeps, synthetic data "
               "and fits"};
  app.require_subcommand(1);

  std::string config_path;
  bool paper_defaults = false;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::string out_path;
  std::string synth_kind;
  std::optional<double> noise;
  std::string fit_kind;
  std::string in_path;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "key = value configuration file")->check(CLI::ExistingFile);
    sub->add_flag("--paper-defaults", paper_defaults, "start from the optimum Cr operating point");
    sub->add_option("--set", overrides, "override a configuration key (key=value), repeatable");
    sub->add_option("--seed", seed, "random seed (default " + std::to_string(default_seed) + ")");
    sub->add_option("--out", out_path, "write output to this file instead of stdout");
  };
  CLI::App* predict = app.add_subcommand("predict", "steady-state report for one scenario");
  CLI::App* simulate = app.add_subcommand("simulate", "loading curve N(t) as CSV");
  CLI::App* sweep = app.add_subcommand("sweep", "sweep a trap parameter, CSV per swept value");
  CLI::App* synth = app.add_subcommand("synth", "synthetic measurement data as CSV");
  CLI::App* fit = app.add_subcommand("fit", "fit a model to CSV data");
  for (auto* sub : {predict, simulate, sweep, synth, fit}) common(sub);
  synth->add_option("--kind", synth_kind, "loading_curve, decay_curve, tof_series, kappa_points, column_profile");
  synth->add_option("--noise", noise, "relative Gaussian noise");
  fit->add_option("kind", fit_kind, "loading-rate, kappa, decay, tof, profile")
      ->required()
      ->check(CLI::IsMember(fit_kinds()));
  fit->add_option("--in", in_path, "input CSV")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return exit_ok;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return exit_ok;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return exit_input_error;
  }

  try {
    RunConfig cfg;
    if (paper_defaults) cfg.values = io::KeyValueConfig::parse_string(paper_defaults_config);
    if (!config_path.empty()) cfg.values.merge(io::KeyValueConfig::parse_file(config_path));
    cfg.values.apply_overrides(overrides);
    if (synth->parsed() && !synth_kind.empty()) cfg.values.set("synth_kind", synth_kind);
    if (noise) cfg.values.set("noise", io::format_double(*noise));
    cfg.validate();
    if (seed) {
      cfg.seed = *seed;
    } else if (cfg.values.has("seed")) {
      const double s = cfg.values.get_double("seed");
      if (!(s >= 0.0) || s != std::floor(s) || s >= 1.8e19) throw InputError("config key 'seed' must be a non-negative integer");
      cfg.seed = static_cast<std::uint64_t>(s);
    }

    if (predict->parsed()) {
      detail::emit(cmd_predict(cfg), out_path, out);
    } else if (simulate->parsed()) {
      detail::emit(cmd_simulate(cfg), out_path, out);
    } else if (sweep->parsed()) {
      SweepResult r;
      detail::emit(cmd_sweep(cfg, &r), out_path, out);
      const std::size_t failures = r.failures();
      const std::size_t points = r.points.size();
      if (failures > 0) err << "warning: " << failures << " of " << points << " sweep points failed, see the error column\n";
      if (failures > 0 && failures == points) return exit_numerical_error;
    } else if (synth->parsed()) {
      detail::emit(cmd_synth(cfg), out_path, out);
    } else if (fit->parsed()) {
      bool converged = true;
      detail::emit(cmd_fit(cfg, fit_kind, in_path, &converged), out_path, out);
      if (!converged) {
        err << "error: fit " << fit_kind << " did not converge within the iteration limit\n";
        return exit_numerical_error;
      }
    }
  } catch (const InputError& e) {
    err << "error: " << e.what() << '\n';
    return exit_input_error;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return exit_numerical_error;
  }
  return exit_ok;
}

}  // namespace cliptrap::cli

#endif
