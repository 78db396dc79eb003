#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

#ifndef PAREX_CLI_PATH
#error "PAREX_CLI_PATH must point at the parex executable"
#endif
#ifndef PAREX_MESHGEN_PATH
#error "PAREX_MESHGEN_PATH must point at the mesh generator executable"
#endif

const fs::path g_dir = [] {
  fs::path d = fs::temp_directory_path() / "parex_cli_tests";
  fs::create_directories(d);
  return d;
}();

// Plain exit-code runner; safe to call outside doctest assertions contexts.
int run(const std::string& cmd) {
  const int status = std::system((cmd + " > " + (g_dir / "run.log").string() + " 2>&1").c_str());
  return status == -1 ? -1 : WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::vector<std::string> lines(const std::string& body) {
  std::vector<std::string> out;
  std::istringstream in(body);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

std::vector<std::string> fields(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

fs::path write_config(const std::string& name, const json& j) {
  const fs::path p = g_dir / name;
  std::ofstream out(p);
  out << j.dump(2);
  return p;
}

// The bar mesh is shared by most extract tests; generated on first use.
const fs::path& bar_mesh() {
  static const fs::path p = [] {
    const fs::path out = g_dir / "bar.msh";
    const int rc = run(std::string(PAREX_MESHGEN_PATH) + " bar " + out.string());
    if (rc != 0) throw std::runtime_error("mesh generation for the bar fixture failed");
    return out;
  }();
  return p;
}

json bar_config() {
  json j;
  j["config_version"] = 1;
  j["mesh_path"] = bar_mesh().string();
  j["materials"] = {{"bar", {{"sigma", 5.8e7}}}};
  j["branches"] = {{{"a", "terminal:a"}, {"b", "terminal:b"}}};
  j["formulation"] = "mqs";
  j["boundary"] = "magnetic";
  j["frequencies"] = {10.0, 100.0};
  return j;
}

constexpr const char* kZHeader =
    "frequency_hz,branch_i,branch_j,re_z_ohm,im_z_ohm,r_ohm,x_ohm,l_henry,c_farad,"
    "formulation,boundary";

}  // namespace

TEST_CASE("mesh generator writes all bundled fixtures") {
  for (const char* f : {"bar", "capacitor"}) {
    const fs::path p = g_dir / (std::string(f) + ".msh");
    CHECK(run(std::string(PAREX_MESHGEN_PATH) + " " + f + " " + p.string()) == 0);
    CHECK(fs::file_size(p) > 0);
  }
  CHECK(run(std::string(PAREX_MESHGEN_PATH) + " nope " + (g_dir / "x.msh").string()) == 1);
}

TEST_CASE("extract produces the documented CSV") {
  const fs::path cfg = write_config("extract.json", bar_config());
  const fs::path out = g_dir / "extract.csv";
  const std::string cmd = std::string(PAREX_CLI_PATH) + " extract --config " + cfg.string() +
                          " --output " + out.string();
  REQUIRE(run(cmd) == 0);
  const std::string body = slurp(out);
  const auto ls = lines(body);
  REQUIRE(ls.size() == 3);  // header + 2 frequencies x 1 branch pair
  CHECK(ls[0] == kZHeader);
  for (int i = 1; i <= 2; ++i) {
    const auto f = fields(ls[i]);
    REQUIRE(f.size() == 11);
    CHECK(std::stod(f[0]) > 0.0);            // frequency
    CHECK(f[1] == "1");                      // 1-based branch indices
    CHECK(f[2] == "1");
    CHECK(std::stod(f[3]) > 0.0);            // resistance
    CHECK(f[3] == f[5]);                     // re_z duplicated as r
    CHECK(std::stod(f[6]) > 0.0);            // inductive: positive reactance
    CHECK(!f[7].empty());                    // l_henry populated
    CHECK(f[8].empty());                     // no capacitance for x >= 0
    CHECK(f[9] == "mqs");
    CHECK(f[10] == "magnetic");
  }
  SUBCASE("output is byte stable across runs") {
    const fs::path out2 = g_dir / "extract2.csv";
    REQUIRE(run(std::string(PAREX_CLI_PATH) + " extract --config " + cfg.string() +
                " --output " + out2.string()) == 0);
    CHECK(slurp(out2) == body);
  }
  SUBCASE("threads do not change the bytes") {
    const fs::path out3 = g_dir / "extract3.csv";
    REQUIRE(run(std::string(PAREX_CLI_PATH) + " extract --config " + cfg.string() +
                " --threads 2 --output " + out3.string()) == 0);
    CHECK(slurp(out3) == body);
  }
}

TEST_CASE("PEC with MQS takes the frequency-independent inductance path") {
  const fs::path mesh = g_dir / "two-bar.msh";
  REQUIRE(run(std::string(PAREX_MESHGEN_PATH) + " two-bar " + mesh.string()) == 0);
  json j;
  j["config_version"] = 1;
  j["mesh_path"] = mesh.string();
  j["materials"] = {{"bar1", {{"pec", true}}},
                    {"bar2", {{"pec", true}}},
                    {"air", json::object()}};
  j["branches"] = {{{"a", "terminal:a"}, {"b", "terminal:b"}},
                   {{"a", "terminal:c"}, {"b", "terminal:d"}}};
  j["conductor_model"] = "pec";
  j["boundary"] = "magnetic";
  const fs::path cfg = write_config("pec_mqs.json", j);
  const fs::path out = g_dir / "pec_mqs.csv";
  REQUIRE(run(std::string(PAREX_CLI_PATH) + " extract --config " + cfg.string() + " --output " +
              out.string()) == 0);
  const auto ls = lines(slurp(out));
  REQUIRE(ls.size() == 4);  // header + upper triangle of the 2x2 L matrix
  for (int i = 1; i <= 3; ++i) {
    const auto f = fields(ls[i]);
    REQUIRE(f.size() == 11);
    CHECK(f[0] == "inf-band");
    CHECK(!f[7].empty());
    CHECK(f[9] == "pec-mqs");
  }
  // Self inductances are positive and dominate the mutual term.
  const double l11 = std::stod(fields(ls[1])[7]);
  const double l12 = std::stod(fields(ls[2])[7]);
  const double l22 = std::stod(fields(ls[3])[7]);
  CHECK(l11 > 0.0);
  CHECK(l22 > 0.0);
  CHECK(std::abs(l12) < l11);
}

TEST_CASE("a mesh without free unknowns is a clean error") {
  // PEC on the all-conductor bar constrains every edge: exit 1, no crash.
  json j = bar_config();
  j["materials"]["bar"] = {{"pec", true}};
  j["conductor_model"] = "pec";
  j.erase("frequencies");
  CHECK(run(std::string(PAREX_CLI_PATH) + " extract --config " +
            write_config("pec_degenerate.json", j).string()) == 1);
}

TEST_CASE("configuration errors exit with code 1") {
  CHECK(run(std::string(PAREX_CLI_PATH) + " extract --config " +
            (g_dir / "missing.json").string()) == 1);

  json bad = bar_config();
  bad.erase("config_version");
  CHECK(run(std::string(PAREX_CLI_PATH) + " extract --config " +
            write_config("no_version.json", bad).string()) == 1);

  bad = bar_config();
  bad["formulation"] = "telegraph";
  CHECK(run(std::string(PAREX_CLI_PATH) + " extract --config " +
            write_config("bad_form.json", bad).string()) == 1);

  bad = bar_config();
  bad.erase("mesh_path");
  CHECK(run(std::string(PAREX_CLI_PATH) + " extract --config " +
            write_config("no_mesh.json", bad).string()) == 1);

  bad = bar_config();
  bad["frequencies"] = {100.0, 10.0};
  CHECK(run(std::string(PAREX_CLI_PATH) + " extract --config " +
            write_config("bad_freq.json", bad).string()) == 1);
}

TEST_CASE("validate-wire runs the analytic model without a mesh") {
  json j;
  j["config_version"] = 1;
  j["frequencies"] = {10.0, 1e4, 1e8};
  j["wire"] = {{"length", 0.05}, {"radius", 0.001}, {"sigma", 5.8e7}};
  const fs::path cfg = write_config("wire_ana.json", j);
  const fs::path out = g_dir / "wire_ana.csv";
  REQUIRE(run(std::string(PAREX_CLI_PATH) + " validate-wire --config " + cfg.string() +
              " --output " + out.string()) == 0);
  const auto ls = lines(slurp(out));
  REQUIRE(ls.size() == 4);
  CHECK(ls[0] ==
        "frequency_hz,r_fe_ohm,x_fe_ohm,l_fe_henry,r_ana_ohm,x_ana_ohm,l_ana_henry,"
        "rel_err_r,rel_err_l");
  const auto lo = fields(ls[1]);
  const auto hi = fields(ls[3]);
  REQUIRE(lo.size() == 9);
  CHECK(lo[1].empty());  // no finite-element columns without a mesh
  CHECK(std::stod(lo[4]) > 0.0);
  // Skin effect: analytic resistance grows with frequency.
  CHECK(std::stod(hi[4]) > 10.0 * std::stod(lo[4]));
}

TEST_CASE("validate-wire flags a mesh that misses the thresholds") {
  // The bar fixture is not the analytic wire: comparison must fail (exit 2).
  json j = bar_config();
  j["frequencies"] = {10.0};
  j["wire"] = {{"length", 0.05}, {"radius", 0.001}, {"sigma", 5.8e7}};
  const fs::path cfg = write_config("wire_bad.json", j);
  const fs::path out = g_dir / "wire_bad.csv";
  CHECK(run(std::string(PAREX_CLI_PATH) + " validate-wire --config " + cfg.string() +
            " --output " + out.string()) == 2);
  const auto ls = lines(slurp(out));
  REQUIRE(ls.size() == 2);
  const auto f = fields(ls[1]);
  REQUIRE(f.size() == 9);
  CHECK(std::stod(f[7]) > 0.02);  // relative resistance error beyond tolerance

  SUBCASE("thresholds are configurable") {
    json loose = j;
    loose["thresholds"] = {{"r_rel", 1e6}, {"l_rel", 1e6}};
    CHECK(run(std::string(PAREX_CLI_PATH) + " validate-wire --config " +
              write_config("wire_loose.json", loose).string() + " --output " +
              (g_dir / "wire_loose.csv").string()) == 0);
  }
}

TEST_CASE("material sweep normalizes capacitance by permittivity") {
  const fs::path mesh = g_dir / "capacitor.msh";
  REQUIRE(run(std::string(PAREX_MESHGEN_PATH) + " capacitor " + mesh.string()) == 0);
  json j;
  j["config_version"] = 1;
  j["mesh_path"] = mesh.string();
  j["materials"] = {{"plates", {{"pec", true}}},
                    {"air", json::object()},
                    {"dielectric", json::object()}};
  j["branches"] = {{{"a", "terminal:a"}, {"b", "terminal:b"}}};
  j["conductor_model"] = "pec";
  j["boundary"] = "magnetic";
  j["frequencies"] = {100.0};
  j["parameter"] = "eps_r";
  j["target_group"] = "dielectric";
  j["values"] = {1.0, 2.0};
  const fs::path cfg = write_config("sweep.json", j);
  const fs::path out = g_dir / "sweep.csv";
  REQUIRE(run(std::string(PAREX_CLI_PATH) + " sweep --config " + cfg.string() + " --output " +
              out.string()) == 0);
  const auto ls = lines(slurp(out));
  REQUIRE(ls.size() == 3);
  CHECK(ls[0] == "parameter,value,c_farad,l_henry,normalized,saturation_rel_change");
  const auto r1 = fields(ls[1]);
  const auto r2 = fields(ls[2]);
  REQUIRE(r1.size() == 6);
  CHECK(r1[0] == "eps_r");
  CHECK(std::stod(r1[2]) > 0.0);
  CHECK(std::stod(r2[2]) > std::stod(r1[2]));  // more dielectric, more C
  CHECK(r1[5].empty());                        // no change column on the first row
  CHECK(std::stod(r2[5]) >= 0.0);

  SUBCASE("unknown parameter is a configuration error") {
    json bad = j;
    bad["parameter"] = "sigma";
    CHECK(run(std::string(PAREX_CLI_PATH) + " sweep --config " +
              write_config("sweep_bad.json", bad).string()) == 1);
  }
}
