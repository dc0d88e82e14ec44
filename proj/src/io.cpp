#include "khess/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace khess {

namespace {

const json& require(const json& j, const char* key, const char* what) {
  if (!j.is_object() || !j.contains(key)) {
    throw FormatError(std::string(what) + ": missing key '" + key + "'");
  }
  return j.at(key);
}

void require_format(const json& j, const char* format) {
  if (!j.is_object() || j.value("format", std::string()) != format) {
    throw FormatError(std::string("expected a '") + format + "' container");
  }
}

}  // namespace

json hmat_to_json(const HMat& m) {
  json re = json::array(), im = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    json rr = json::array(), ri = json::array();
    for (int j = 0; j < m.cols(); ++j) {
      rr.push_back(m(i, j).real());
      ri.push_back(m(i, j).imag());
    }
    re.push_back(rr);
    im.push_back(ri);
  }
  return json{{"re", re}, {"im", im}};
}

HMat hmat_from_json(const json& j) {
  const json& re = require(j, "re", "matrix");
  const json& im = require(j, "im", "matrix");
  const auto n = static_cast<int>(re.size());
  if (n < 1 || n > kMaxDim || im.size() != re.size()) throw FormatError("matrix: bad dimensions");
  HMat m(n, n);
  for (int i = 0; i < n; ++i) {
    if (re[static_cast<std::size_t>(i)].size() != static_cast<std::size_t>(n) ||
        im[static_cast<std::size_t>(i)].size() != static_cast<std::size_t>(n)) {
      throw FormatError("matrix: rows must have length " + std::to_string(n));
    }
    for (int c = 0; c < n; ++c)
      m(i, c) = cd(re[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)].get<double>(),
                   im[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)].get<double>());
  }
  return m;
}

json background_to_json(const TorusBackground& bg) {
  return json{{"n", bg.n()}, {"grid", bg.grid()}, {"omega", hmat_to_json(bg.omega())}};
}

BackgroundPtr background_from_json(const json& j) {
  const int n = require(j, "n", "background").get<int>();
  const auto grid = require(j, "grid", "background").get<std::vector<int>>();
  const HMat omega = hmat_from_json(require(j, "omega", "background"));
  return TorusBackground::make(n, grid, omega);
}

json field_to_json(const PotentialField& f) {
  if (!f.background) throw FormatError("field without a background");
  return json{{"format", "khess.field"},
              {"background", background_to_json(*f.background)},
              {"role", to_string(f.role)},
              {"data", f.data}};
}

PotentialField field_from_json(const json& j, BackgroundPtr bg) {
  require_format(j, "khess.field");
  BackgroundPtr own = background_from_json(require(j, "background", "field"));
  if (bg) {
    if (!bg->same_grid(*own)) throw GridMismatch("field container on a different grid");
  } else {
    bg = own;
  }
  auto data = require(j, "data", "field").get<std::vector<double>>();
  if (data.size() != bg->num_points()) throw FormatError("field: data length does not match the grid");
  return PotentialField(bg, std::move(data), role_from_string(j.value("role", std::string("generic"))));
}

json twist_to_json(const TwistForm& alpha) {
  json j{{"format", "khess.twist"}, {"A0", hmat_to_json(alpha.A0)}};
  j["beta"] = alpha.beta ? field_to_json(*alpha.beta) : json(nullptr);
  return j;
}

TwistForm twist_from_json(const json& j, const BackgroundPtr& bg) {
  require_format(j, "khess.twist");
  TwistForm t{hmat_from_json(require(j, "A0", "twist")), std::nullopt};
  if (t.A0.rows() != bg->n()) throw FormatError("twist: A0 has the wrong dimension");
  if (j.contains("beta") && !j.at("beta").is_null()) t.beta = field_from_json(j.at("beta"), bg);
  return t;
}

json to_json(const CoupledSolution& sol) {
  json trace = json::array();
  for (const auto& r : sol.continuation_trace)
    trace.push_back({{"t", r.t}, {"r1", r.r1}, {"r2", r.r2}, {"newton_iterations", r.newton_iterations},
                     {"accepted", r.accepted}});
  return json{{"format", "khess.coupled_solution"},
              {"k", sol.k},
              {"r1", sol.r1},
              {"r2", sol.r2},
              {"iterations", sol.iterations},
              {"phi", field_to_json(sol.phi)},
              {"F", field_to_json(sol.F)},
              {"alpha", twist_to_json(sol.alpha)},
              {"continuation_trace", trace}};
}

CoupledSolution coupled_solution_from_json(const json& j) {
  require_format(j, "khess.coupled_solution");
  CoupledSolution s;
  s.phi = field_from_json(require(j, "phi", "solution"));
  s.F = field_from_json(require(j, "F", "solution"), s.phi.background);
  s.alpha = twist_from_json(require(j, "alpha", "solution"), s.phi.background);
  s.k = require(j, "k", "solution").get<int>();
  s.r1 = j.value("r1", 0.0);
  s.r2 = j.value("r2", 0.0);
  s.iterations = j.value("iterations", 0);
  for (const auto& r : j.value("continuation_trace", json::array()))
    s.continuation_trace.push_back(
        {r.at("t").get<double>(), r.at("r1").get<double>(), r.at("r2").get<double>(),
         r.at("newton_iterations").get<int>(), r.at("accepted").get<bool>()});
  return s;
}

json to_json(const MASolution& sol) {
  return json{{"format", "khess.ma_solution"},
              {"residual", sol.residual},
              {"resolved_residual", sol.resolved_residual},
              {"mass", sol.mass},
              {"iterations", sol.iterations},
              {"psi", field_to_json(sol.psi)}};
}

json to_json(const EnergyReport& r) {
  return json{{"format", "khess.energy_report"}, {"mu_k", r.mu_k},       {"entropy_term", r.entropy_term},
              {"j_term", r.j_term},              {"twist_term", r.twist_term}, {"lambda", r.lambda},
              {"A_F", r.A_F},                    {"sup_phi", r.sup_phi},  {"sup_F", r.sup_F}};
}

json to_json(const EstimateReport& r) {
  return json{{"format", "khess.estimate_report"},
              {"entropy", r.entropy},
              {"A_F", r.A_F},
              {"sup_abs_F", r.sup_abs_F},
              {"sup_F", r.sup_F},
              {"inf_F", r.inf_F},
              {"sup_abs_phi", r.sup_abs_phi},
              {"lemma2_max", r.lemma2_max},
              {"lambda_used", r.lambda_used},
              {"epsilon", r.epsilon},
              {"ma_residual", r.ma_residual}};
}

json to_json(const GeodesicPath& g) {
  json samples = json::array();
  json times = json::array();
  for (std::size_t i = 0; i < g.u.size(); ++i) {
    samples.push_back(field_to_json(g.u.samples[i]));
    times.push_back(g.u.time(i));
  }
  json trace = json::array();
  for (const auto& s : g.trace)
    trace.push_back({{"epsilon", s.epsilon},
                     {"equation_residual", s.equation_residual},
                     {"geodesic_residual", s.geodesic_residual},
                     {"newton_iterations", s.newton_iterations}});
  return json{{"format", "khess.geodesic"},
              {"epsilon", g.epsilon},
              {"residual", g.residual},
              {"equation_residual", g.equation_residual},
              {"iterations", g.iterations},
              {"time_discretization", g.time_discretization},
              {"times", times},
              {"energies", g.energies},
              {"trace", trace},
              {"samples", samples}};
}

PotentialPath geodesic_samples_from_json(const json& j) {
  require_format(j, "khess.geodesic");
  const auto times = require(j, "times", "geodesic").get<std::vector<double>>();
  const json& samples = require(j, "samples", "geodesic");
  if (samples.size() != times.size() || times.size() < 2) throw FormatError("geodesic: inconsistent samples");
  PotentialPath path;
  path.t0 = times.front();
  path.h = times[1] - times[0];
  BackgroundPtr bg;
  for (const auto& s : samples) {
    path.samples.push_back(field_from_json(s, bg));
    bg = path.samples.back().background;
  }
  return path;
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_json(const std::filesystem::path& path, const json& j) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

CsvTable::CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

void CsvTable::add_row(const std::vector<std::string>& cells) {
  if (cells.size() != header_.size()) {
    throw FormatError("csv row has " + std::to_string(cells.size()) + " cells, header has " +
                      std::to_string(header_.size()));
  }
  rows_.push_back(cells);
}

std::string CsvTable::str() const {
  std::ostringstream out;
  const auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "," : "") << cells[i];
    out << '\n';
  };
  line(header_);
  for (const auto& r : rows_) line(r);
  return out.str();
}

void CsvTable::write(const std::filesystem::path& path) const {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  out << str();
}

}  // namespace khess
