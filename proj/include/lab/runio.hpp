// Declarative experiment runner: JSON configs dispatched to the solver
// pipelines, each run writing an isolated directory of artifacts plus a
// manifest that lists every other emitted file with its SHA-256 checksum.
//
// Determinism contract: summaries contain metrics only (no timestamps or
// host data), so re-running an identical config reproduces summary.json
// byte for byte.
#pragma once

#include <map>
#include <string>
#include <vector>

#include "lab/flow.hpp"
#include "lab/rings.hpp"
#include "lab/tracker.hpp"

namespace lab {

/// SHA-256 (FIPS 180-4) as lowercase hex; used for manifest checksums and
/// artifact-cache keys.
std::string sha256_hex(const void* data, std::size_t len);
std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::string& path);

enum class RunMode {
  pvf_run,        // integrate the point-vortex flow
  eq_find,        // solve a ring equilibrium, emit a catalog entry
  gl_relax,       // fixed-rate relaxation from ring initial data
  gl_constrained, // momentum-constrained relaxation
  epsilon_sweep,  // gl_relax + tracking per epsilon, trend table
  verify_suite,   // acceptance-criteria battery
};
const char* to_string(RunMode m);

/// One experiment, deserialized from JSON.  Scalar fields left at their
/// defaults (NaN / 0 / empty) mean "not set"; validate_config reports every
/// missing or inconsistent field for the chosen mode at once.
struct ExperimentConfig {
  int schema_version = 1;
  RunMode mode = RunMode::pvf_run;
  std::string name = "run";

  // --- physics ---------------------------------------------------------
  int k = 1;                     // ring symmetry order (vortices per ring)
  std::vector<Ring> rings;       // ring family: seed, template, or reference
  std::string equilibrium;       // catalog entry name; overrides `rings`
  std::vector<double> vortices;  // flat re,im,degree triples (pvf_run only)
  double omega0 = NAN;           // rotation rate; NaN = derive when possible
  double p_target = NAN;         // momentum target (gl_constrained)
  std::string eq_solver;         // eq_find: single_ring_from_momentum |
                                 //   aligned_multiring | staggered_pair
  double eq_target = NAN;        // eq_find target value

  // --- numerics --------------------------------------------------------
  int Nr = 0;          // radial nodes; 0 = choose from epsilon
  int J_max = 0;       // angular bandwidth; 0 = choose from epsilon
  double dt = 0.0;     // step size; <= 0 = solver default
  double residual_tol = 1e-6;
  long max_steps = 200000;
  double epsilon = NAN;
  std::vector<double> epsilon_list;  // sweeps: >= 3, strictly decreasing
  double t_end = NAN;                // pvf_run horizon

  // --- outputs ---------------------------------------------------------
  std::string out_dir;  // empty = <output root>/<name>
  bool write_snapshots = true;
  bool write_csv = true;

  // --- acceptance ------------------------------------------------------
  // metric name -> upper bound; the run's exit status is nonzero when any
  // listed summary metric is missing or exceeds its bound.
  std::map<std::string, double> accept;
  std::vector<int> criteria;  // verify_suite: ids to run (empty = all)
  std::string cache_dir;      // verify_suite artifact cache location
};

ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);

/// Throws PreconditionError naming every offending field.
void validate_config(const ExperimentConfig& c);

/// Canonical JSON echo of a config (sorted keys; embedded in manifests).
std::string config_to_json(const ExperimentConfig& c);

/// Root for run directories: $LAB_OUTPUT_DIR when set, else "runs".
std::string output_root();

struct RunArtifacts {
  std::string run_dir;
  std::vector<std::string> files;  // everything written, manifest last
  std::string summary_json;        // contents of summary.json
  bool ok = true;                  // all acceptance bounds honored
};

RunArtifacts run_experiment(const ExperimentConfig& cfg);

/// The epsilon_sweep pipeline: one gl_relax + tracking pass per epsilon
/// (failures recorded per epsilon, sweep continues), then a trend table
/// with monotone-decrease verdicts for the energy gap, momentum gap,
/// vortex deviation, and force-balance defect.
RunArtifacts sweep_epsilon(const ExperimentConfig& cfg);

/// Grid sized to resolve eps-cores at the family's ring radii: nodes
/// clustered there (sigma = 2 eps, finest spacing eps/6), Nr ~ 16/eps and
/// J_max ~ pi (r_max + 0.15)/eps unless overridden.  k_sym_override picks
/// the carried-mode stride (0 = the family's own symmetry order).
PolarGrid vortex_solver_grid(const RingFamily& fam, double eps, int Nr = 0,
                             int J_max = 0, int k_sym_override = 0);

/// detect_vortices rows "t,re,im,degree,radius" for a list of snapshots.
void write_detections_csv(const std::vector<std::vector<VortexObservation>>& obs,
                          const std::vector<double>& times,
                          const std::string& path);

}  // namespace lab
