// lab: command-line front end for the disc vortex laboratory.
//
//   lab run <config.json>     execute one experiment, write a run directory
//   lab sweep <config.json>   epsilon sweep (config mode: epsilon_sweep)
//   lab verify [--filter X]   acceptance criteria (id, list, or name part)
//   lab catalog [--json]      print the relative-equilibrium catalog
//
// Global --threads N caps OpenMP parallelism.  Exit status: 0 on success
// with all acceptance predicates met, 1 when a run/criterion fails its
// bounds, 2 on configuration or internal errors.
#include <cctype>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <omp.h>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "json.hpp"

#include "lab/rings.hpp"
#include "lab/runio.hpp"
#include "lab/verify.hpp"

namespace {

std::vector<int> parse_filter(const std::string& filter) {
  std::vector<int> ids;
  if (filter.empty()) {
    for (int i = 1; i <= 16; ++i) ids.push_back(i);
    return ids;
  }
  std::vector<std::string> tokens;
  std::string cur;
  for (char ch : filter + ",") {
    if (ch == ',') {
      if (!cur.empty()) tokens.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  const auto names = lab::criterion_names();
  for (const auto& tok : tokens) {
    const bool numeric =
        std::all_of(tok.begin(), tok.end(),
                    [](unsigned char c) { return std::isdigit(c); });
    if (numeric) {
      ids.push_back(std::stoi(tok));
      continue;
    }
    bool matched = false;
    for (const auto& [id, name] : names)
      if (name.find(tok) != std::string::npos) {
        ids.push_back(id);
        matched = true;
      }
    if (!matched)
      throw lab::PreconditionError("--filter: no criterion matches '" + tok +
                                   "'");
  }
  return ids;
}

int report_run(const lab::RunArtifacts& art) {
  std::printf("run directory: %s\n", art.run_dir.c_str());
  for (const auto& f : art.files) std::printf("  %s\n", f.c_str());
  std::printf("%s\n", art.ok ? "acceptance: ok" : "acceptance: FAILED");
  return art.ok ? 0 : 1;
}

void print_catalog_table() {
  std::printf("%-24s %2s %2s %12s %10s  %-28s %4s %2s %7s\n", "name", "k",
              "m", "omega0", "period", "radii (degree)", "null", "S",
              "align");
  for (const auto& e : lab::standard_catalog()) {
    std::string radii;
    for (const auto& r : e.eq.family.rings)
      radii += fmt::format("{}{:.4f}({:+d})", radii.empty() ? "" : " ", r.rho,
                           r.degree);
    const double T = e.eq.period();
    std::printf("%-24s %2d %2d %12.6f %10s  %-28s %4d %2d %7.4f\n",
                e.name.c_str(), e.eq.family.k, e.eq.family.ansatz_m(),
                e.eq.omega0,
                std::isinf(T) ? "inf" : fmt::format("{:.4f}", T).c_str(),
                radii.c_str(), e.hessian.null_count, e.hessian.S,
                e.hessian.tangent_alignment);
  }
}

nlohmann::json catalog_json() {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& e : lab::standard_catalog()) {
    nlohmann::json rings = nlohmann::json::array();
    for (const auto& r : e.eq.family.rings)
      rings.push_back({{"rho", r.rho}, {"phi", r.phi}, {"degree", r.degree}});
    const double T = e.eq.period();
    out.push_back({{"name", e.name},
                   {"k", e.eq.family.k},
                   {"n", e.eq.family.n()},
                   {"m", e.eq.family.ansatz_m()},
                   {"omega0", e.eq.omega0},
                   {"period", std::isinf(T) ? nlohmann::json("inf")
                                            : nlohmann::json(T)},
                   {"rings", rings},
                   {"hessian",
                    {{"eigenvalues", e.hessian.eigenvalues},
                     {"null_count", e.hessian.null_count},
                     {"S", e.hessian.S},
                     {"tangent_alignment", e.hessian.tangent_alignment}}}});
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"disc point-vortex / Ginzburg-Landau laboratory"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "cap OpenMP thread count");

  std::string run_config, sweep_config;
  auto* run = app.add_subcommand("run", "execute one experiment config");
  run->add_option("config", run_config, "JSON config path")
      ->required()
      ->check(CLI::ExistingFile);

  auto* sweep = app.add_subcommand("sweep", "run an epsilon-sweep config");
  sweep->add_option("config", sweep_config, "JSON config path")
      ->required()
      ->check(CLI::ExistingFile);

  std::string filter, cache_dir, out_path;
  auto* verify = app.add_subcommand("verify", "run acceptance criteria");
  verify->add_option("--filter", filter,
                     "criterion ids (comma list) or name substrings");
  verify->add_option("--cache", cache_dir, "artifact cache directory");
  verify->add_option("--out", out_path, "also write a summary JSON here");

  bool as_json = false;
  auto* catalog =
      app.add_subcommand("catalog", "print the relative-equilibrium catalog");
  catalog->add_flag("--json", as_json, "emit JSON instead of a table");

  CLI11_PARSE(app, argc, argv);
  if (threads > 0) omp_set_num_threads(threads);

  try {
    if (run->parsed())
      return report_run(lab::run_experiment(lab::load_config(run_config)));

    if (sweep->parsed())
      return report_run(lab::sweep_epsilon(lab::load_config(sweep_config)));

    if (verify->parsed()) {
      const std::vector<int> ids = parse_filter(filter);
      const std::string cache =
          cache_dir.empty()
              ? (std::filesystem::path(lab::output_root()) / "acceptance_cache")
                    .string()
              : cache_dir;
      int failures = 0;
      nlohmann::json matrix = nlohmann::json::array();
      for (int id : ids) {
        for (const auto& r : lab::run_criteria({id}, cache)) {
          std::printf("%s\n", lab::format_result(r).c_str());
          std::fflush(stdout);
          if (!r.passed) ++failures;
          matrix.push_back({{"id", r.id},
                            {"name", r.name},
                            {"passed", r.passed},
                            {"detail", r.detail},
                            {"measured", r.measured},
                            {"tolerance", r.tolerance}});
        }
      }
      std::printf("%d/%zu criteria passed\n",
                  static_cast<int>(ids.size()) - failures, ids.size());
      if (!out_path.empty()) {
        nlohmann::json summary{{"criteria", matrix},
                               {"all_passed", failures == 0}};
        std::ofstream out(out_path);
        out << summary.dump(2) << "\n";
      }
      return failures == 0 ? 0 : 1;
    }

    if (catalog->parsed()) {
      if (as_json)
        std::printf("%s\n", catalog_json().dump(2).c_str());
      else
        print_catalog_table();
      return 0;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 2;
}
