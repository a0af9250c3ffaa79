#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "evolution.hpp"
#include "spectral.hpp"

namespace flowstab {

inline constexpr const char* kToolVersion = "1.0.0";

// 17 significant digits round-trip doubles exactly
inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// Run configuration: plain-text dotted keys, one `key = value` per line,
// `#` starts a comment.  Unknown keys and malformed lines are hard errors
// with the offending line number.

struct RunConfig {
  GeometryConfig geometry;
  PhysicalParams physics;
  double s = 0.5;          // ambient field amplitude
  double beta_max = 50.0;  // sweep half width
  int n_samples = 101;     // sweep samples on [0, beta_max]
  double T = 20.0;         // trajectory horizon; 0 selects it from the abscissa
  double dt = 0.01;
  std::uint64_t seed = 1;
  std::string out_dir = "out";
};

inline std::string write_config(const RunConfig& c) {
  std::ostringstream os;
  os << "geometry.Lx = " << fmt17(c.geometry.Lx) << "\n"
     << "geometry.Ly = " << fmt17(c.geometry.Ly) << "\n"
     << "geometry.nx = " << c.geometry.nx << "\n"
     << "geometry.ny = " << c.geometry.ny << "\n"
     << "physics.eta = " << fmt17(c.physics.eta) << "\n"
     << "physics.lambda = " << fmt17(c.physics.lambda) << "\n"
     << "physics.nu = " << fmt17(c.physics.nu) << "\n"
     << "ambient.s = " << fmt17(c.s) << "\n"
     << "sweep.beta_max = " << fmt17(c.beta_max) << "\n"
     << "sweep.n_samples = " << c.n_samples << "\n"
     << "evolution.T = " << fmt17(c.T) << "\n"
     << "evolution.dt = " << fmt17(c.dt) << "\n"
     << "evolution.seed = " << c.seed << "\n"
     << "output.dir = " << c.out_dir << "\n";
  return os.str();
}

namespace detail {
inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

inline double parse_double(const std::string& v, int line) {
  std::size_t pos = 0;
  double d = 0.0;
  try {
    d = std::stod(v, &pos);
  } catch (const std::exception&) {
    throw std::runtime_error("config line " + std::to_string(line) + ": bad number '" + v + "'");
  }
  ensure(pos == v.size(), "config line " + std::to_string(line) + ": trailing junk in '" + v + "'");
  return d;
}

inline long long parse_int(const std::string& v, int line) {
  std::size_t pos = 0;
  long long d = 0;
  try {
    d = std::stoll(v, &pos);
  } catch (const std::exception&) {
    throw std::runtime_error("config line " + std::to_string(line) + ": bad integer '" + v + "'");
  }
  ensure(pos == v.size(), "config line " + std::to_string(line) + ": trailing junk in '" + v + "'");
  return d;
}
}  // namespace detail

inline RunConfig parse_config(const std::string& text) {
  RunConfig c;
  std::istringstream is(text);
  std::string raw;
  int line = 0;
  while (std::getline(is, raw)) {
    ++line;
    const auto hash = raw.find('#');
    std::string s = detail::trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (s.empty()) continue;
    const auto eq = s.find('=');
    ensure(eq != std::string::npos,
           "config line " + std::to_string(line) + ": expected 'key = value'");
    const std::string key = detail::trim(s.substr(0, eq));
    const std::string val = detail::trim(s.substr(eq + 1));
    ensure(!val.empty(), "config line " + std::to_string(line) + ": empty value");
    if (key == "geometry.Lx")
      c.geometry.Lx = detail::parse_double(val, line);
    else if (key == "geometry.Ly")
      c.geometry.Ly = detail::parse_double(val, line);
    else if (key == "geometry.nx")
      c.geometry.nx = static_cast<int>(detail::parse_int(val, line));
    else if (key == "geometry.ny")
      c.geometry.ny = static_cast<int>(detail::parse_int(val, line));
    else if (key == "physics.eta")
      c.physics.eta = detail::parse_double(val, line);
    else if (key == "physics.lambda")
      c.physics.lambda = detail::parse_double(val, line);
    else if (key == "physics.nu")
      c.physics.nu = detail::parse_double(val, line);
    else if (key == "ambient.s")
      c.s = detail::parse_double(val, line);
    else if (key == "sweep.beta_max")
      c.beta_max = detail::parse_double(val, line);
    else if (key == "sweep.n_samples")
      c.n_samples = static_cast<int>(detail::parse_int(val, line));
    else if (key == "evolution.T")
      c.T = detail::parse_double(val, line);
    else if (key == "evolution.dt")
      c.dt = detail::parse_double(val, line);
    else if (key == "evolution.seed")
      c.seed = static_cast<std::uint64_t>(detail::parse_int(val, line));
    else if (key == "output.dir")
      c.out_dir = val;
    else
      throw std::runtime_error("config line " + std::to_string(line) + ": unknown key '" + key +
                               "'");
  }
  return c;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream f(path);
  ensure(f.good(), "load_config: cannot open " + path);
  std::ostringstream os;
  os << f.rdbuf();
  return parse_config(os.str());
}

inline bool config_equal(const RunConfig& a, const RunConfig& b) {
  return write_config(a) == write_config(b);
}

// ---------------------------------------------------------------------------
// CSV emitters (fixed column contracts)

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  ensure(f.good(), "write_text: cannot open " + path);
  f << text;
  ensure(f.good(), "write_text: write failed for " + path);
}

inline std::string sweep_csv(const SweepResult& sw) {
  std::ostringstream os;
  os << "beta,norm_estimate,iterations,converged\n";
  for (const auto& s : sw.samples)
    os << fmt17(s.beta) << ',' << fmt17(s.norm_estimate) << ',' << s.iterations << ','
       << (s.converged ? 1 : 0) << "\n";
  return os.str();
}

inline std::string eigen_csv(const EigenReport& er) {
  std::ostringstream os;
  os << "re_lambda,im_lambda,residual\n";
  for (std::size_t k = 0; k < er.eigenvalues.size(); ++k)
    os << fmt17(er.eigenvalues[k].real()) << ',' << fmt17(er.eigenvalues[k].imag()) << ','
       << fmt17(er.residuals[k]) << "\n";
  return os.str();
}

inline std::string trajectory_csv(const TrajectoryRecord& tr) {
  std::ostringstream os;
  os << "t,energy,dissipation_integral,complement_defect\n";
  for (std::size_t k = 0; k < tr.times.size(); ++k)
    os << fmt17(tr.times[k]) << ',' << fmt17(tr.energies[k]) << ','
       << fmt17(tr.dissipation_integral[k]) << ',' << fmt17(tr.complement_defect[k]) << "\n";
  return os.str();
}

inline std::string table_csv(const std::vector<std::string>& header,
                             const std::vector<std::vector<double>>& rows) {
  std::ostringstream os;
  for (std::size_t k = 0; k < header.size(); ++k) os << (k ? "," : "") << header[k];
  os << "\n";
  for (const auto& r : rows) {
    ensure(r.size() == header.size(), "table_csv: ragged row");
    for (std::size_t k = 0; k < r.size(); ++k) os << (k ? "," : "") << fmt17(r[k]);
    os << "\n";
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// State snapshots as JSON, exact round trip

inline nlohmann::json vec_to_json(const VecC& v) {
  nlohmann::json a = nlohmann::json::array();
  for (int k = 0; k < v.size(); ++k) a.push_back({v[k].real(), v[k].imag()});
  return a;
}

inline VecC vec_from_json(const nlohmann::json& a) {
  VecC v(static_cast<int>(a.size()));
  for (int k = 0; k < v.size(); ++k)
    v[k] = cplx(a[k][0].get<double>(), a[k][1].get<double>());
  return v;
}

inline void save_state(const std::string& path, const StateVector& v) {
  nlohmann::json j;
  j["p"] = vec_to_json(v.p);
  j["u"] = vec_to_json(v.u);
  j["w1"] = vec_to_json(v.w1);
  j["w2"] = vec_to_json(v.w2);
  write_text(path, j.dump(1));
}

inline StateVector load_state(const std::string& path) {
  std::ifstream f(path);
  ensure(f.good(), "load_state: cannot open " + path);
  nlohmann::json j = nlohmann::json::parse(f);
  StateVector v;
  v.p = vec_from_json(j.at("p"));
  v.u = vec_from_json(j.at("u"));
  v.w1 = vec_from_json(j.at("w1"));
  v.w2 = vec_from_json(j.at("w2"));
  return v;
}

// ---------------------------------------------------------------------------
// Matrix Market coordinate output for the assembled operators

inline void export_matrix_market(const std::string& path, const SpMat& M,
                                 const std::string& comment = "") {
  std::ostringstream os;
  os << "%%MatrixMarket matrix coordinate real general\n";
  if (!comment.empty()) os << "% " << comment << "\n";
  os << M.rows() << ' ' << M.cols() << ' ' << M.nonZeros() << "\n";
  for (int k = 0; k < M.outerSize(); ++k)
    for (SpMat::InnerIterator it(M, k); it; ++it)
      os << it.row() + 1 << ' ' << it.col() + 1 << ' ' << fmt17(it.value()) << "\n";
  write_text(path, os.str());
}

// ---------------------------------------------------------------------------
// Manifest with FNV-1a 64 content checksums

inline std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string file_checksum(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  ensure(f.good(), "file_checksum: cannot open " + path);
  std::ostringstream os;
  os << f.rdbuf();
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(os.str())));
  return buf;
}

inline nlohmann::json config_to_json(const RunConfig& c) {
  nlohmann::json j;
  j["geometry"] = {{"Lx", c.geometry.Lx}, {"Ly", c.geometry.Ly}, {"nx", c.geometry.nx},
                   {"ny", c.geometry.ny}};
  j["physics"] = {{"eta", c.physics.eta}, {"lambda", c.physics.lambda}, {"nu", c.physics.nu}};
  j["ambient"] = {{"s", c.s}};
  j["sweep"] = {{"beta_max", c.beta_max}, {"n_samples", c.n_samples}};
  j["evolution"] = {{"T", c.T}, {"dt", c.dt}, {"seed", c.seed}};
  j["output"] = {{"dir", c.out_dir}};
  return j;
}

class ManifestBuilder {
 public:
  explicit ManifestBuilder(const RunConfig& cfg) {
    j_["version"] = kToolVersion;
    j_["config"] = config_to_json(cfg);
    j_["scalars"] = nlohmann::json::object();
    j_["timing_seconds"] = nlohmann::json::object();
    j_["files"] = nlohmann::json::array();
  }
  void scalar(const std::string& key, const nlohmann::json& value) { j_["scalars"][key] = value; }
  void timing(const std::string& key, double seconds) { j_["timing_seconds"][key] = seconds; }
  void file(const std::string& path) {
    j_["files"].push_back({{"path", path}, {"fnv1a64", file_checksum(path)}});
  }
  void write(const std::string& path) const { write_text(path, j_.dump(1)); }
  const nlohmann::json& json() const { return j_; }

 private:
  nlohmann::json j_;
};

// ---------------------------------------------------------------------------
// Static SVG line plots from the CSV artifacts; rendering only

namespace detail {
struct Csv {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

inline Csv read_csv(const std::string& path) {
  std::ifstream f(path);
  ensure(f.good(), "read_csv: cannot open " + path);
  Csv c;
  std::string line;
  ensure(static_cast<bool>(std::getline(f, line)), "read_csv: empty file " + path);
  std::istringstream hs(line);
  std::string tok;
  while (std::getline(hs, tok, ',')) c.header.push_back(trim(tok));
  while (std::getline(f, line)) {
    if (trim(line).empty()) continue;
    std::istringstream rs(line);
    std::vector<double> row;
    int ln = static_cast<int>(c.rows.size()) + 2;
    while (std::getline(rs, tok, ',')) row.push_back(parse_double(trim(tok), ln));
    ensure(row.size() == c.header.size(), "read_csv: ragged row in " + path);
    c.rows.push_back(row);
  }
  ensure(!c.rows.empty(), "read_csv: no data rows in " + path);
  return c;
}

inline int csv_column(const Csv& c, const std::string& name) {
  for (std::size_t k = 0; k < c.header.size(); ++k)
    if (c.header[k] == name) return static_cast<int>(k);
  throw std::runtime_error("read_csv: missing column " + name);
}
}  // namespace detail

inline void emit_plot(const std::string& csv_path, const std::string& kind,
                      const std::string& svg_path) {
  const detail::Csv csv = detail::read_csv(csv_path);
  std::string xlab, ylab;
  int xc = 0, yc = 0;
  bool logy = false;
  if (kind == "energy") {
    xc = detail::csv_column(csv, "t");
    yc = detail::csv_column(csv, "energy");
    xlab = "t";
    ylab = "log10 energy";
    logy = true;
  } else if (kind == "sweep") {
    xc = detail::csv_column(csv, "beta");
    yc = detail::csv_column(csv, "norm_estimate");
    xlab = "beta";
    ylab = "resolvent norm";
  } else {
    throw std::runtime_error("emit_plot: unknown kind '" + kind + "'");
  }

  std::vector<std::pair<double, double>> pts;
  for (const auto& r : csv.rows) {
    double y = r[yc];
    if (logy) {
      ensure(y > 0.0, "emit_plot: nonpositive value on log scale");
      y = std::log10(y);
    }
    pts.emplace_back(r[xc], y);
  }
  std::sort(pts.begin(), pts.end());
  double x0 = pts.front().first, x1 = pts.back().first;
  double y0 = pts.front().second, y1 = y0;
  for (const auto& p : pts) {
    y0 = std::min(y0, p.second);
    y1 = std::max(y1, p.second);
  }
  if (x1 - x0 <= 0.0) x1 = x0 + 1.0;
  if (y1 - y0 <= 0.0) y1 = y0 + 1.0;

  const double W = 640, H = 420, ml = 70, mr = 20, mt = 30, mb = 50;
  auto sx = [&](double x) { return ml + (x - x0) / (x1 - x0) * (W - ml - mr); };
  auto sy = [&](double y) { return H - mb - (y - y0) / (y1 - y0) * (H - mt - mb); };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
     << "\" viewBox=\"0 0 " << W << ' ' << H << "\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
     << "<text x=\"" << W / 2 << "\" y=\"18\" text-anchor=\"middle\" font-size=\"14\">" << kind
     << "</text>\n";
  os << "<line x1=\"" << ml << "\" y1=\"" << H - mb << "\" x2=\"" << W - mr << "\" y2=\""
     << H - mb << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << H - mb
     << "\" stroke=\"black\"/>\n";
  char lab[40];
  for (int k = 0; k <= 4; ++k) {
    const double xv = x0 + (x1 - x0) * k / 4.0, yv = y0 + (y1 - y0) * k / 4.0;
    std::snprintf(lab, sizeof(lab), "%.3g", xv);
    os << "<line x1=\"" << sx(xv) << "\" y1=\"" << H - mb << "\" x2=\"" << sx(xv) << "\" y2=\""
       << H - mb + 5 << "\" stroke=\"black\"/>\n"
       << "<text x=\"" << sx(xv) << "\" y=\"" << H - mb + 20
       << "\" text-anchor=\"middle\" font-size=\"11\">" << lab << "</text>\n";
    std::snprintf(lab, sizeof(lab), "%.3g", yv);
    os << "<line x1=\"" << ml - 5 << "\" y1=\"" << sy(yv) << "\" x2=\"" << ml << "\" y2=\""
       << sy(yv) << "\" stroke=\"black\"/>\n"
       << "<text x=\"" << ml - 8 << "\" y=\"" << sy(yv) + 4
       << "\" text-anchor=\"end\" font-size=\"11\">" << lab << "</text>\n";
  }
  os << "<text x=\"" << (ml + W - mr) / 2 << "\" y=\"" << H - 10
     << "\" text-anchor=\"middle\" font-size=\"12\">" << xlab << "</text>\n";
  os << "<text x=\"16\" y=\"" << (mt + H - mb) / 2
     << "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 16 "
     << (mt + H - mb) / 2 << ")\">" << ylab << "</text>\n";
  os << "<polyline fill=\"none\" stroke=\"#1f5fbf\" stroke-width=\"1.5\" points=\"";
  for (const auto& p : pts) os << sx(p.first) << ',' << sy(p.second) << ' ';
  os << "\"/>\n</svg>\n";
  write_text(svg_path, os.str());
}

}  // namespace flowstab
