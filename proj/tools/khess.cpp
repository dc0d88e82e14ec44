// Command-line front end: run spec files, verify property suites, inspect
// artifacts and evaluate symmetric polynomials.
//
// Exit status: 0 success, 1 failed run or suite, 2 invalid input.

#include "khess/exact.hpp"
#include "khess/experiment.hpp"
#include "khess/parallel.hpp"
#include "khess/suites.hpp"
#include "khess/symcone.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>

using namespace khess;

namespace {

json field_stats(const PotentialField& f) {
  return json{{"n", f.background->n()}, {"grid", f.background->grid()}, {"role", to_string(f.role)},
              {"sup", f.sup()},        {"inf", f.inf()},                {"mean", f.mean()},
              {"sup_abs", f.sup_abs()}};
}

json cone_stats(const PotentialField& phi, int k) {
  try {
    const HessianState s = evaluate_state(phi, k);
    return json{{"k", k}, {"admissible", true}, {"min_ratio", s.ratio().inf()}, {"max_ratio", s.ratio().sup()}};
  } catch (const ConeError& e) {
    return json{{"k", k}, {"admissible", false}, {"reason", e.what()}};
  }
}

json inspect_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  std::string header, line;
  std::getline(in, header);
  std::size_t rows = 0;
  while (std::getline(in, line))
    if (!line.empty()) ++rows;
  return json{{"format", "csv"}, {"header", header}, {"rows", rows}};
}

json inspect(const std::filesystem::path& path, int k) {
  if (path.extension() == ".csv") return inspect_csv(path);
  const json j = read_json(path);
  const std::string format = j.is_object() ? j.value("format", std::string()) : std::string();
  json out{{"format", format}};
  if (format == "khess.field") {
    const PotentialField f = field_from_json(j);
    out["field"] = field_stats(f);
    if (f.role == FieldRole::phi || k > 0) out["cone"] = cone_stats(f, std::max(k, 1));
  } else if (format == "khess.coupled_solution") {
    const CoupledSolution s = coupled_solution_from_json(j);
    const auto [r1, r2] = coupled_residuals(s.phi, s.F, s.alpha, s.k);
    out["k"] = s.k;
    out["phi"] = field_stats(s.phi);
    out["F"] = field_stats(s.F);
    out["residuals"] = {{"sigma_equation", r1}, {"laplace_equation", r2}};
    out["recorded_residuals"] = {{"sigma_equation", s.r1}, {"laplace_equation", s.r2}};
  } else if (format == "khess.ma_solution") {
    const PotentialField psi = field_from_json(j.at("psi"));
    out["psi"] = field_stats(psi);
    out["residuals"] = {{"monge_ampere", j.at("residual")}, {"resolved", j.at("resolved_residual")}};
    out["mass"] = j.at("mass");
  } else if (format == "khess.geodesic") {
    const PotentialPath u = geodesic_samples_from_json(j);
    const int kk = std::max(k, 1);
    out["samples"] = u.size();
    out["epsilon"] = j.at("epsilon");
    out["k"] = kk;
    out["residuals"] = {{"geodesic", geodesic_residual(u, kk)}, {"recorded_geodesic", j.at("residual")}};
    const auto e = path_energies(u, kk);
    out["energy_min"] = *std::min_element(e.begin(), e.end());
    out["energy_max"] = *std::max_element(e.begin(), e.end());
  } else if (format == "khess.manifest") {
    out["status"] = j.value("status", std::string("unknown"));
    out["spec"] = j.at("spec");
    out["artifacts"] = j.at("artifacts");
    if (j.contains("summary")) out["summary"] = j.at("summary");
    if (j.contains("error")) out["error"] = j.at("error");
  } else if (!format.empty()) {
    out["content"] = j;
  } else {
    throw FormatError(path.string() + ": not a khess artifact (no 'format' member)");
  }
  return out;
}

json sigma_report(int k, const std::vector<double>& lambda, bool exact_mode) {
  const int n = static_cast<int>(lambda.size());
  if (n < 1) throw DomainError("sigma: need at least one eigenvalue");
  if (k < 0 || k > n) throw DomainError("sigma: need 0 <= k <= " + std::to_string(n));
  const std::span<const double> l(lambda);
  json out{{"n", n}, {"k", k}, {"lambda", lambda}};
  out["sigma_k"] = sigma_raw<double>(k, l);
  out["normalized"] = sigma_raw<double>(k, l) / binomial(n, k);
  out["cone_class"] = cone_class<double>(l).k_max;
  json grad = json::array();
  if (k >= 1)
    for (int i = 0; i < n; ++i) grad.push_back(sigma_raw<double>(k - 1, l, i));
  out["gradient"] = grad;
  if (exact_mode) {
    const auto q = exact::to_rational(l);
    out["sigma_k_exact"] = sigma_raw<mpq_class>(k, std::span<const mpq_class>(q)).get_str();
  }
  return out;
}

int configure_workers() {
  if (const char* env = std::getenv("KHESS_WORKERS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || v < 1 || v > 1024) {
      std::cerr << "khess: KHESS_WORKERS must be an integer in [1, 1024], got '" << env << "'\n";
      return 2;
    }
    set_worker_count(static_cast<int>(v));
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"k-Hessian geometry on flat complex tori"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  std::string spec_file, output_override;
  auto* run = app.add_subcommand("run", "Run the experiment described by a JSON spec file (or a manifest)");
  run->add_option("spec", spec_file, "Spec file")->required()->check(CLI::ExistingFile);
  run->add_option("--output", output_override, "Override the output directory of the spec");

  std::string suite, out_dir = ".";
  std::optional<std::size_t> samples;
  std::uint64_t seed = 1;
  auto* verify = app.add_subcommand("verify", "Run a property suite and print its report");
  verify->add_option("suite", suite, "Suite name")->required()->check(CLI::IsMember(suite_names()));
  verify->add_option("--samples", samples, "Random draws per configuration (0 gives a vacuous pass)");
  verify->add_option("--seed", seed, "Random seed");
  verify->add_option("--out", out_dir, "Directory for the failing-sample file");

  std::string artifact;
  int inspect_k = 0;
  auto* insp = app.add_subcommand("inspect", "Print statistics and residuals of an artifact");
  insp->add_option("artifact", artifact, "JSON container or CSV table")->required()->check(CLI::ExistingFile);
  insp->add_option("-k", inspect_k, "Hessian order for admissibility and geodesic residuals");

  int sigma_k = 0;
  std::vector<double> lambda;
  bool exact_mode = false;
  auto* sig = app.add_subcommand("sigma", "Elementary symmetric polynomial of an eigenvalue vector");
  sig->add_option("k", sigma_k, "Degree")->required();
  sig->add_option("lambda", lambda, "Eigenvalues")->required();
  sig->add_flag("--exact", exact_mode, "Also evaluate in exact rationals");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  if (const int rc = configure_workers(); rc != 0) return rc;

  try {
    if (*run) {
      ExperimentSpec spec = load_spec(spec_file);
      if (!output_override.empty()) spec.output = output_override;
      const RunResult r = run_experiment(spec);
      std::cout << json{{"status", "ok"}, {"manifest", r.manifest.string()}, {"summary", r.summary}}.dump(2) << '\n';
      return 0;
    }
    if (*verify) {
      SuiteOptions opt;
      opt.samples = samples;
      opt.seed = seed;
      const SuiteResult r = run_suite(suite, opt);
      std::cout << r.report.dump(2) << '\n';
      if (!r.pass) {
        const auto path = std::filesystem::path(out_dir) / (suite + "-failure.json");
        write_json(path, r.report.at("failure"));
        std::cerr << "khess: suite '" << suite << "' failed; failing sample written to " << path.string() << '\n';
        return 1;
      }
      return 0;
    }
    if (*insp) {
      std::cout << inspect(artifact, inspect_k).dump(2) << '\n';
      return 0;
    }
    if (*sig) {
      std::cout << sigma_report(sigma_k, lambda, exact_mode).dump(2) << '\n';
      return 0;
    }
  } catch (const SpecError& e) {
    std::cerr << "khess: invalid spec: " << e.what() << '\n';
    return 2;
  } catch (const FormatError& e) {
    std::cerr << "khess: " << e.what() << '\n';
    return 2;
  } catch (const DomainError& e) {
    std::cerr << "khess: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "khess: failed: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
