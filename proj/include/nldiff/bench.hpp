#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "nldiff/grid.hpp"

namespace nldiff::bench {

struct ExperimentSpec {
  std::string experiment = "exp1";  // exp1 | exp2 | exp3
  std::string scale = "desk";       // desk | paper
  std::vector<std::string> methods = {"ptw", "rr", "fft", "ffto"};
  std::vector<int> grids;
  std::vector<double> taus;
  // Box radii for exp1/exp2, Gaussian sigmas for exp3.
  std::vector<double> kernel_params;
  double T = 1.0;
  double p = 2.0;
  double lambda = 0.5;
  int rr_levels = 500;        // L_Q
  int rr_kernel_levels = 1;   // L_R; 0 = auto from distinct stencil weights
  bool rr_requantize = true;
  int fft_slices = 10;        // L_Q for the Fourier-slice backend
  bool fft_interpolate = true;
  bool fft_requantize = false;
  int threads = 1;
  std::string out_dir = "out";
  std::uint64_t seed = 1;
};

// Fills grids, taus, kernel params and backend knobs for a named experiment at
// the given scale. Throws on unknown names.
ExperimentSpec make_preset(const std::string& experiment, const std::string& scale);

// Flat key=value config. '#' starts a comment; unknown keys are errors.
void apply_config_kv(ExperimentSpec& spec, const std::string& key, const std::string& value);
// Applies a whole config text; context prefixes error messages (usually the
// file name). Reading the file once and reusing the text keeps pipe-backed
// paths like /dev/stdin usable.
void apply_config_text(ExperimentSpec& spec, const std::string& text, const std::string& context);
void load_config_file(ExperimentSpec& spec, const std::string& path);
// Throws std::invalid_argument describing the first violated constraint.
void validate(const ExperimentSpec& spec);
// Lists every config key with its meaning (the CLI prints this under --help).
std::string config_key_help();

struct RunRow {
  std::string experiment;
  std::string method;
  int n = 0;
  double tau = 0.0;
  double kernel_param = 0.0;
  double p = 0.0;  // 0 marks the identity range kernel
  int levels_value = 0;
  int levels_kernel = 0;
  double runtime_s = 0.0;
  bool failed = false;    // blow-up; rel_err column carries "failed"
  double rel_err = 0.0;
  double mass_drift = 0.0;      // accumulated per-step |mass change| / initial mass
  double max_abs_final = 0.0;
  bool stability_satisfied = true;
};

struct BenchResult {
  std::vector<RunRow> rows;
  std::string csv_path;
  std::vector<std::string> dat_paths;
};

// Runs the full grid x kernel-param x tau x method sweep, writing results.csv,
// per-(n, tau) timing .dat files and a gnuplot script into spec.out_dir.
// Progress goes to log when non-null.
BenchResult run_experiment(const ExperimentSpec& spec, std::ostream* log);

void write_csv(const std::string& path, const std::vector<RunRow>& rows);
std::vector<RunRow> read_csv(const std::string& path);

// Reference-field sidecars ("NLREF001", uint32 n, n^2 float64 LE, row-major).
void write_reference_field(const std::string& path, const Field2& u);
bool load_reference_field(const std::string& path, Field2& out);

// Fast self-check battery; prints one line per check, returns the number of
// failures. Randomized checks draw from the given seed.
int run_verify(std::uint64_t seed, std::ostream& log);

}  // namespace nldiff::bench
