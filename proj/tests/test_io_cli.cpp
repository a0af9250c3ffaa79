#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include <flowstab/io.hpp>

using namespace flowstab;
using Catch::Matchers::ContainsSubstring;
namespace fs = std::filesystem;

namespace {
fs::path scratch_dir() {
  const fs::path d = fs::temp_directory_path() / "flowstab_io_tests";
  fs::create_directories(d);
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  REQUIRE(f.good());
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

OperatorPair make_pair(int n = 8, double s = 0.5) {
  GeometryConfig geo;
  geo.nx = n;
  geo.ny = n;
  const Grid g = build_grid(geo);
  return assemble(g, PhysicalParams{}, build_ambient_field(s, g));
}
}  // namespace

TEST_CASE("seventeen digits round-trip doubles", "[io_cli]") {
  for (double v : {1.0 / 3.0, 0.1, 3.141592653589793, 1e-300, 6.02214076e23, -7.25, 0.0}) {
    CHECK(std::stod(fmt17(v)) == v);
  }
  CHECK(std::signbit(std::stod(fmt17(-0.0))));
}

TEST_CASE("config text survives a write and parse cycle", "[io_cli]") {
  RunConfig c;
  c.geometry.Lx = 2.5;
  c.geometry.Ly = 1.5;
  c.geometry.nx = 10;
  c.geometry.ny = 6;
  c.physics.eta = 0.8;
  c.physics.lambda = 0.4;
  c.physics.nu = 1.3;
  c.s = 0.25;
  c.beta_max = 12.5;
  c.n_samples = 7;
  c.T = 3.5;
  c.dt = 0.005;
  c.seed = 987654321ull;
  c.out_dir = "lab_out";
  CHECK(config_equal(parse_config(write_config(c)), c));
  CHECK(config_equal(parse_config(write_config(RunConfig{})), RunConfig{}));
}

TEST_CASE("config errors point at the offending line", "[io_cli]") {
  CHECK_THROWS_WITH(parse_config("geometry.Lx = 1.0\nbogus.key = 3\n"),
                    ContainsSubstring("line 2") && ContainsSubstring("unknown key"));
  CHECK_THROWS_WITH(parse_config("geometry.Lx = abc\n"), ContainsSubstring("bad number"));
  CHECK_THROWS_WITH(parse_config("geometry.nx = 8 junk\n"),
                    ContainsSubstring("trailing junk"));
  CHECK_THROWS_WITH(parse_config("geometry.Lx =\n"), ContainsSubstring("empty value"));
  CHECK_THROWS_WITH(parse_config("geometry.Lx 1.0\n"),
                    ContainsSubstring("expected 'key = value'"));
  const RunConfig c = parse_config("# note\n\n  geometry.nx = 10  # tail comment\n");
  CHECK(c.geometry.nx == 10);
  CHECK(c.geometry.ny == RunConfig{}.geometry.ny);
}

TEST_CASE("csv emitters honor their column contracts", "[io_cli]") {
  SweepResult sw;
  sw.samples.push_back({0.0, 1.5, 3, true});
  sw.samples.push_back({0.5, 2.25, 7, false});
  CHECK(sweep_csv(sw) ==
        "beta,norm_estimate,iterations,converged\n0,1.5,3,1\n0.5,2.25,7,0\n");

  TrajectoryRecord tr;
  tr.times = {0.0, 0.5};
  tr.energies = {4.0, 1.0};
  tr.dissipation_integral = {0.0, 3.0};
  tr.complement_defect = {0.0, 0.0};
  const std::string tcsv = trajectory_csv(tr);
  CHECK(tcsv.substr(0, tcsv.find('\n')) == "t,energy,dissipation_integral,complement_defect");

  EigenReport er;
  er.eigenvalues = {cplx(-0.5, 2.0)};
  er.residuals = {1e-9};
  const std::string ecsv = eigen_csv(er);
  CHECK(ecsv.substr(0, ecsv.find('\n')) == "re_lambda,im_lambda,residual");
  CHECK(std::count(ecsv.begin(), ecsv.end(), '\n') == 2);

  CHECK_THROWS_AS(table_csv({"a", "b"}, {{1.0}}), std::runtime_error);
}

TEST_CASE("csv reader recovers written values bitwise", "[io_cli]") {
  SweepResult sw;
  sw.samples.push_back({1.0 / 3.0, 0.1, 11, true});
  sw.samples.push_back({3.141592653589793, 1e-300, 12, true});
  const fs::path p = scratch_dir() / "roundtrip.csv";
  write_text(p.string(), sweep_csv(sw));
  const detail::Csv csv = detail::read_csv(p.string());
  REQUIRE(csv.rows.size() == 2);
  const int bc = detail::csv_column(csv, "beta");
  const int nc = detail::csv_column(csv, "norm_estimate");
  CHECK(csv.rows[0][bc] == 1.0 / 3.0);
  CHECK(csv.rows[0][nc] == 0.1);
  CHECK(csv.rows[1][bc] == 3.141592653589793);
  CHECK(csv.rows[1][nc] == 1e-300);
  CHECK_THROWS_AS(detail::csv_column(csv, "missing"), std::runtime_error);
}

TEST_CASE("state snapshots round-trip bitwise through json", "[io_cli]") {
  GeometryConfig geo;
  geo.nx = 8;
  geo.ny = 8;
  const Grid g = build_grid(geo);
  const StateVector v = random_state(g, 3, true);
  const fs::path p = scratch_dir() / "state.json";
  save_state(p.string(), v);
  const StateVector w = load_state(p.string());
  CHECK((v.p - w.p).norm() == 0.0);
  CHECK((v.u - w.u).norm() == 0.0);
  CHECK((v.w1 - w.w1).norm() == 0.0);
  CHECK((v.w2 - w.w2).norm() == 0.0);
}

TEST_CASE("matrix market export is one-based coordinate text", "[io_cli]") {
  SpMat M(2, 3);
  std::vector<Trip> t = {{0, 0, 1.5}, {1, 2, -2.25}};
  M.setFromTriplets(t.begin(), t.end());
  M.makeCompressed();
  const fs::path p = scratch_dir() / "m.mtx";
  export_matrix_market(p.string(), M, "test");
  std::istringstream is(slurp(p));
  std::string l0, l1, l2, l3, l4;
  std::getline(is, l0);
  std::getline(is, l1);
  std::getline(is, l2);
  std::getline(is, l3);
  std::getline(is, l4);
  CHECK(l0 == "%%MatrixMarket matrix coordinate real general");
  CHECK(l1 == "% test");
  CHECK(l2 == "2 3 2");
  CHECK(l3 == "1 1 1.5");
  CHECK(l4 == "2 3 -2.25");
}

TEST_CASE("checksums match the published test vectors", "[io_cli]") {
  CHECK(fnv1a64("") == 14695981039346656037ull);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cull);
  const fs::path p = scratch_dir() / "vec.txt";
  write_text(p.string(), "a");
  CHECK(file_checksum(p.string()) == "af63dc4c8601ec8c");
}

TEST_CASE("manifest records version, scalars, timings and files", "[io_cli]") {
  const fs::path dat = scratch_dir() / "artifact.txt";
  write_text(dat.string(), "a");
  ManifestBuilder man(RunConfig{});
  man.scalar("answer", 42);
  man.timing("assemble", 1.5);
  man.file(dat.string());
  const nlohmann::json& j = man.json();
  CHECK(j.at("version").get<std::string>() == kToolVersion);
  CHECK(j.at("scalars").at("answer").get<int>() == 42);
  CHECK(j.at("timing_seconds").at("assemble").get<double>() == 1.5);
  CHECK(j.at("files").at(0).at("fnv1a64").get<std::string>() == "af63dc4c8601ec8c");
  CHECK(j.at("config").at("geometry").at("nx").get<int>() == RunConfig{}.geometry.nx);
  const fs::path mp = scratch_dir() / "manifest.json";
  man.write(mp.string());
  CHECK(nlohmann::json::parse(slurp(mp)) == j);
}

TEST_CASE("plots render as svg polylines", "[io_cli]") {
  TrajectoryRecord tr;
  for (int k = 0; k <= 20; ++k) {
    tr.times.push_back(0.1 * k);
    tr.energies.push_back(4.0 * std::exp(-0.2 * k));
    tr.dissipation_integral.push_back(4.0 - tr.energies.back());
    tr.complement_defect.push_back(0.0);
  }
  const fs::path tcsv = scratch_dir() / "traj.csv";
  write_text(tcsv.string(), trajectory_csv(tr));
  const fs::path tsvg = scratch_dir() / "traj.svg";
  emit_plot(tcsv.string(), "energy", tsvg.string());
  const std::string svg = slurp(tsvg);
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK_THAT(svg, ContainsSubstring("polyline"));

  SweepResult sw;
  sw.samples.push_back({0.0, 1.0, 2, true});
  sw.samples.push_back({1.0, 3.0, 2, true});
  const fs::path scsv = scratch_dir() / "sweep.csv";
  write_text(scsv.string(), sweep_csv(sw));
  const fs::path ssvg = scratch_dir() / "sweep.svg";
  emit_plot(scsv.string(), "sweep", ssvg.string());
  CHECK_THAT(slurp(ssvg), ContainsSubstring("resolvent norm"));

  CHECK_THROWS_AS(emit_plot(scsv.string(), "bogus", ssvg.string()), std::runtime_error);

  const fs::path empty = scratch_dir() / "empty.csv";
  write_text(empty.string(), "t,energy,dissipation_integral,complement_defect\n");
  CHECK_THROWS_AS(emit_plot(empty.string(), "energy", ssvg.string()), std::runtime_error);

  tr.energies[5] = 0.0;
  write_text(tcsv.string(), trajectory_csv(tr));
  CHECK_THROWS_AS(emit_plot(tcsv.string(), "energy", tsvg.string()), std::runtime_error);
}

TEST_CASE("repeated runs emit identical artifact bytes", "[io_cli]") {
  const OperatorPair pair = make_pair(8);
  const std::string s1 = sweep_csv(resolvent_sweep(pair, 2.0, 3));
  const std::string s2 = sweep_csv(resolvent_sweep(pair, 2.0, 3));
  CHECK(s1 == s2);
  const StateVector v = random_state(pair.grid, 4, true);
  const std::string t1 = trajectory_csv(simulate(pair, v, 0.5, 0.1));
  const std::string t2 = trajectory_csv(simulate(pair, v, 0.5, 0.1));
  CHECK(t1 == t2);
}
