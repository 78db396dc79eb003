// Command-line front end: JSON config in, CSV out.
//
// Subcommands:
//   extract        impedance sweep over frequency for the configured branches
//   validate-wire  finite-element vs analytic round-wire comparison
//   sweep          material-parameter sweep (normalized C/eps_r or L/mu_r)
//
// Exit codes: 0 success, 1 configuration/input error, 2 partial numerical
// failure (run completed, some rows failed or thresholds missed).

#include <cmath>
#include <complex>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "parex/extraction.hpp"
#include "parex/oracle.hpp"

using nlohmann::json;
using namespace parex;

namespace {

constexpr double kPi = 3.14159265358979323846;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

json load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ConfigError("config parse error in '" + path + "': " + e.what());
  }
  if (!j.contains("config_version") || j["config_version"] != 1)
    throw ConfigError("config must declare \"config_version\": 1");
  return j;
}

std::vector<double> parse_frequencies(const json& j) {
  if (!j.contains("frequencies")) throw ConfigError("missing \"frequencies\"");
  const json& f = j["frequencies"];
  std::vector<double> out;
  if (f.is_array()) {
    for (const auto& v : f) out.push_back(v.get<double>());
  } else if (f.is_object()) {
    const double fmin = f.at("f_min").get<double>();
    const double fmax = f.at("f_max").get<double>();
    if (!(fmin > 0.0) || !(fmax >= fmin)) throw ConfigError("invalid frequency range");
    int n;
    if (f.contains("points")) {
      n = f["points"].get<int>();
    } else {
      const double ppd = f.value("points_per_decade", 5.0);
      n = static_cast<int>(std::lround(std::log10(fmax / fmin) * ppd)) + 1;
    }
    if (n < 1) throw ConfigError("frequency point count must be >= 1");
    if (n == 1 || fmax == fmin) {
      out.push_back(fmin);
    } else {
      for (int k = 0; k < n; ++k)
        out.push_back(fmin * std::pow(fmax / fmin, static_cast<double>(k) / (n - 1)));
      out.back() = fmax;
    }
  } else {
    throw ConfigError("\"frequencies\" must be a list or {f_min, f_max, points_per_decade}");
  }
  if (out.empty()) throw ConfigError("frequency list is empty");
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!(out[i] > 0.0)) throw ConfigError("frequencies must be positive");
    if (i > 0 && out[i] < out[i - 1]) throw ConfigError("frequencies must ascend");
  }
  return out;
}

Formulation parse_formulation(const std::string& s) {
  if (s == "full-wave") return Formulation::FullWave;
  if (s == "darwin") return Formulation::Darwin;
  if (s == "mqs") return Formulation::Mqs;
  throw ConfigError("unknown formulation '" + s + "' (full-wave | darwin | mqs)");
}

BoundaryCondition parse_boundary(const std::string& s) {
  if (s == "electric") return BoundaryCondition::Electric;
  if (s == "magnetic") return BoundaryCondition::Magnetic;
  if (s == "dual") return BoundaryCondition::DualImage;
  throw ConfigError("unknown boundary '" + s + "' (electric | magnetic | dual)");
}

std::string formulation_label(const ProblemSpec& spec) {
  std::string base = spec.formulation == Formulation::FullWave ? "full-wave"
                     : spec.formulation == Formulation::Darwin ? "darwin"
                                                               : "mqs";
  return spec.conductor_model == ConductorModel::Pec ? "pec-" + base : base;
}

std::string boundary_label(BoundaryCondition b) {
  switch (b) {
    case BoundaryCondition::Electric: return "electric";
    case BoundaryCondition::Magnetic: return "magnetic";
    default: return "dual";
  }
}

struct Run {
  Mesh mesh;
  MaterialTable mat;
  ProblemSpec spec;
  double f0_capacitance = 100.0;
  std::string output;
};

MaterialTable parse_materials(const json& j, const Mesh& mesh) {
  if (!j.contains("materials") || !j["materials"].is_object())
    throw ConfigError("missing \"materials\" object (keyed by physical-group name)");
  MaterialTable mat;
  for (const auto& [name, m] : j["materials"].items()) {
    const int tag = mesh.tag_of_name(name, 3);
    Material out;
    out.sigma = m.value("sigma", 0.0);
    out.eps_r = m.value("eps_r", 1.0);
    out.mu_r = m.value("mu_r", 1.0);
    out.pec = m.value("pec", false);
    mat.regions[tag] = out;
  }
  mat.validate(mesh);
  return mat;
}

std::vector<Branch> parse_branches(const json& j, const Mesh& mesh) {
  if (!j.contains("branches") || !j["branches"].is_array() || j["branches"].empty())
    throw ConfigError("missing \"branches\" array of {a, b} terminal-name pairs");
  std::vector<Branch> out;
  for (const auto& b : j["branches"]) {
    Branch br;
    br.terminal_a = mesh.tag_of_name(b.at("a").get<std::string>(), 2);
    br.terminal_b = mesh.tag_of_name(b.at("b").get<std::string>(), 2);
    out.push_back(br);
  }
  return out;
}

Run parse_run(const json& j, int threads) {
  Run run;
  if (!j.contains("mesh_path")) throw ConfigError("missing \"mesh_path\"");
  run.mesh = load_mesh(j["mesh_path"].get<std::string>());
  run.mat = parse_materials(j, run.mesh);
  run.spec.branches = parse_branches(j, run.mesh);
  run.spec.formulation = parse_formulation(j.value("formulation", std::string("mqs")));
  run.spec.conductor_model = j.value("conductor_model", std::string("lossy")) == "pec"
                                 ? ConductorModel::Pec
                                 : ConductorModel::Lossy;
  run.spec.boundary = parse_boundary(j.value("boundary", std::string("dual")));
  const bool pec_mqs = run.spec.conductor_model == ConductorModel::Pec &&
                       run.spec.formulation == Formulation::Mqs;
  if (!pec_mqs || j.contains("frequencies")) run.spec.frequencies = parse_frequencies(j);
  if (pec_mqs) run.spec.frequencies.clear();  // frequency-independent path
  run.spec.I0 = j.value("I0", 1.0);
  run.spec.sigma_tilde = j.value("sigma_tilde", 1.0);
  run.spec.compensation = j.value("compensation", true);
  run.spec.f_x = j.value("f_x", 1000.0);
  run.spec.threads = threads > 0 ? threads : j.value("threads", 1);
  run.f0_capacitance = j.value("f0_capacitance", 100.0);
  run.output = j.value("output", std::string());
  return run;
}

std::string resolve_output(const std::string& flag, const std::string& config_value,
                           const std::string& fallback) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("PAREX_OUTPUT"); env && *env) return env;
  if (!config_value.empty()) return config_value;
  return fallback;
}

void write_file(const std::string& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open output file '" + path + "'");
  out << body;
  if (!out) throw ConfigError("failed writing output file '" + path + "'");
}

constexpr const char* kZHeader =
    "frequency_hz,branch_i,branch_j,re_z_ohm,im_z_ohm,r_ohm,x_ohm,l_henry,c_farad,"
    "formulation,boundary\n";

void append_z_row(std::ostringstream& os, const std::string& freq_field, int bi, int bj,
                  std::optional<Complex> z, double omega, const std::string& form,
                  const std::string& bnd) {
  os << freq_field << ',' << bi << ',' << bj << ',';
  if (z) {
    const double r = z->real(), x = z->imag();
    os << fmt17(r) << ',' << fmt17(x) << ',' << fmt17(r) << ',' << fmt17(x) << ',';
    if (x >= 0.0)
      os << fmt17(x / omega) << ',' << "";
    else
      os << "" << ',' << fmt17(-1.0 / (omega * x));
  } else {
    os << ",,,,,";
  }
  os << ',' << form << ',' << bnd << '\n';
}

int cmd_extract(const std::string& config_path, const std::string& output_flag, int threads,
                bool verbose) {
  const json j = load_config(config_path);
  Run run = parse_run(j, threads);
  const std::string out_path = resolve_output(output_flag, run.output, "parex_out.csv");
  const std::string form = formulation_label(run.spec);
  const std::string bnd = boundary_label(run.spec.boundary);
  const int nb = static_cast<int>(run.spec.branches.size());

  std::ostringstream os;
  os << kZHeader;
  bool partial_failure = false;

  if (run.spec.conductor_model == ConductorModel::Pec &&
      run.spec.formulation == Formulation::Mqs) {
    const Eigen::MatrixXd L = extract_l_pec_mqs(run.mesh, run.mat, run.spec);
    for (int i = 0; i < nb; ++i)
      for (int jb = i; jb < nb; ++jb)
        os << "inf-band," << (i + 1) << ',' << (jb + 1) << ",,,,," << fmt17(L(i, jb)) << ",,"
           << form << ',' << bnd << '\n';
    std::printf("extract: %d branch(es), inf-band, %s, %s boundary\n", nb, form.c_str(),
                bnd.c_str());
  } else {
    const SweepResult res = sweep(run.mesh, run.mat, run.spec);
    for (const auto& e : res.entries) {
      const double omega = 2.0 * kPi * e.frequency;
      for (int i = 0; i < nb; ++i)
        for (int jb = i; jb < nb; ++jb) {
          std::optional<Complex> z;
          if (e.ok) z = e.Z(i, jb);
          append_z_row(os, fmt17(e.frequency), i + 1, jb + 1, z, omega, form, bnd);
        }
      if (!e.ok) {
        partial_failure = true;
        std::fprintf(stderr, "warning: f = %g Hz failed: %s\n", e.frequency, e.error.c_str());
      }
    }
    std::printf("extract: %d branch(es), %zu frequencies, %s, %s boundary\n", nb,
                run.spec.frequencies.size(), form.c_str(), bnd.c_str());
  }

  write_file(out_path, os.str());
  if (verbose) std::printf("wrote %s\n", out_path.c_str());
  return partial_failure ? 2 : 0;
}

int cmd_validate_wire(const std::string& config_path, const std::string& output_flag, int threads,
                      bool verbose) {
  const json j = load_config(config_path);
  oracle::WireModel model;
  if (j.contains("wire")) {
    const json& w = j["wire"];
    model.length = w.value("length", model.length);
    model.radius = w.value("radius", model.radius);
    model.sigma = w.value("sigma", model.sigma);
  }
  const std::vector<double> freqs = parse_frequencies(j);
  const double r_tol = j.contains("thresholds") ? j["thresholds"].value("r_rel", 0.02) : 0.02;
  const double l_tol = j.contains("thresholds") ? j["thresholds"].value("l_rel", 0.05) : 0.05;

  std::vector<std::optional<Complex>> fe(freqs.size());
  if (j.contains("mesh_path")) {
    Run run = parse_run(j, threads);
    run.spec.formulation = Formulation::Mqs;
    run.spec.conductor_model = ConductorModel::Lossy;
    run.spec.frequencies = freqs;
    const SweepResult res = sweep(run.mesh, run.mat, run.spec);
    for (std::size_t i = 0; i < freqs.size(); ++i)
      if (res.entries[i].ok) fe[i] = res.entries[i].Z(0, 0);
  }

  std::ostringstream os;
  os << "frequency_hz,r_fe_ohm,x_fe_ohm,l_fe_henry,r_ana_ohm,x_ana_ohm,l_ana_henry,"
        "rel_err_r,rel_err_l\n";
  bool pass = true;
  bool compared = false;
  for (std::size_t i = 0; i < freqs.size(); ++i) {
    const double f = freqs[i];
    const double omega = 2.0 * kPi * f;
    const Complex za = oracle::z_ana(model, f);
    os << fmt17(f) << ',';
    if (fe[i]) {
      const double r = fe[i]->real(), x = fe[i]->imag();
      const double err_r = std::abs(r - za.real()) / std::abs(za.real());
      const double err_l = std::abs(x - za.imag()) / std::abs(za.imag());
      os << fmt17(r) << ',' << fmt17(x) << ',' << fmt17(x / omega) << ',';
      os << fmt17(za.real()) << ',' << fmt17(za.imag()) << ',' << fmt17(za.imag() / omega) << ',';
      os << fmt17(err_r) << ',' << fmt17(err_l) << '\n';
      compared = true;
      if (err_r > r_tol || err_l > l_tol) pass = false;
    } else {
      os << ",,," << fmt17(za.real()) << ',' << fmt17(za.imag()) << ','
         << fmt17(za.imag() / omega) << ",,\n";
      if (j.contains("mesh_path")) pass = false;  // FE solve failed
    }
  }

  const std::string out_path = resolve_output(output_flag, j.value("output", std::string()),
                                              "parex_validate.csv");
  write_file(out_path, os.str());
  if (verbose) std::printf("wrote %s\n", out_path.c_str());
  if (!compared) {
    std::printf("validate-wire: analytic curves only (no mesh_path given)\n");
    return 0;
  }
  std::printf("validate-wire: %s (R tol %.3g, L tol %.3g)\n", pass ? "PASS" : "FAIL", r_tol,
              l_tol);
  return pass ? 0 : 2;
}

int cmd_sweep(const std::string& config_path, const std::string& output_flag, int threads,
              bool verbose) {
  const json j = load_config(config_path);
  const std::string parameter = j.value("parameter", std::string());
  if (parameter != "eps_r" && parameter != "mu_r")
    throw ConfigError("\"parameter\" must be eps_r or mu_r");
  if (!j.contains("target_group")) throw ConfigError("missing \"target_group\"");
  const std::string target = j["target_group"].get<std::string>();
  if (!j.contains("values") || !j["values"].is_array() || j["values"].empty())
    throw ConfigError("missing \"values\" array");
  std::vector<double> values;
  for (const auto& v : j["values"]) values.push_back(v.get<double>());

  Run run = parse_run(j, threads);
  const int tag = run.mesh.tag_of_name(target, 3);

  std::ostringstream os;
  os << "parameter,value,c_farad,l_henry,normalized,saturation_rel_change\n";
  double prev_norm = 0.0;
  for (std::size_t k = 0; k < values.size(); ++k) {
    const double v = values[k];
    MaterialTable mat = run.mat;
    double normalized;
    std::string c_field, l_field;
    if (parameter == "eps_r") {
      mat.regions[tag].eps_r = v;
      ProblemSpec s = run.spec;
      s.formulation = Formulation::Darwin;
      const CExtraction c = extract_c_darwin_pec(run.mesh, mat, s, run.f0_capacitance);
      normalized = c.c / v;
      c_field = fmt17(c.c);
    } else {
      mat.regions[tag].mu_r = v;
      ProblemSpec s = run.spec;
      if (s.frequencies.size() > 1) s.frequencies.resize(1);
      const SweepResult res = sweep(run.mesh, mat, s);
      if (!res.entries[0].ok) throw ConfigError("sweep solve failed: " + res.entries[0].error);
      const double l = res.entries[0].Z(0, 0).imag() / (2.0 * kPi * res.entries[0].frequency);
      normalized = l / v;
      l_field = fmt17(l);
    }
    os << parameter << ',' << fmt17(v) << ',' << c_field << ',' << l_field << ','
       << fmt17(normalized) << ',';
    if (k > 0) os << fmt17(std::abs(normalized - prev_norm) / std::abs(prev_norm));
    os << '\n';
    prev_norm = normalized;
  }

  const std::string out_path = resolve_output(output_flag, run.output, "parex_sweep.csv");
  write_file(out_path, os.str());
  std::printf("sweep: %s over %zu values on '%s'\n", parameter.c_str(), values.size(),
              target.c_str());
  if (verbose) std::printf("wrote %s\n", out_path.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"parex: finite-element parasitic impedance extraction"};
  app.require_subcommand(1);
  std::string config_path, output_path;
  int threads = 0;
  bool verbose = false;
  for (auto* sub : {app.add_subcommand("extract", "impedance sweep to CSV"),
                    app.add_subcommand("validate-wire", "analytic round-wire comparison"),
                    app.add_subcommand("sweep", "material parameter sweep")}) {
    sub->add_option("--config", config_path, "JSON config path")->required();
    sub->add_option("--output", output_path, "output CSV path");
    sub->add_option("--threads", threads, "worker thread count");
    sub->add_flag("--verbose", verbose, "chatty progress output");
  }
  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand("extract"))
      return cmd_extract(config_path, output_path, threads, verbose);
    if (app.got_subcommand("validate-wire"))
      return cmd_validate_wire(config_path, output_path, threads, verbose);
    return cmd_sweep(config_path, output_path, threads, verbose);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
