#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "s3w/eval.hpp"
#include "s3w/grad.hpp"
#include "s3w/s3w.hpp"
#include "s3w/vmf.hpp"

namespace s3w {

// Shortest decimal that round-trips a double (17 significant digits).
std::string format_g17(double v);

// Cloud CSV: one row per point, d+1 unit coordinates, optionally a trailing
// non-negative weight column. No header. Readers classify the layout from
// the data: all columns unit-norm -> bare points; all but the last
// unit-norm and the last non-negative -> weighted (weights renormalized to
// sum 1). Parse failures carry "path:line:" prefixes.
void write_cloud_csv(const std::string& path, const Mat& points);
void write_cloud_csv(const std::string& path, const Mat& points,
                     const Vec& weights);
EmpiricalMeasure read_cloud_csv(const std::string& path);

// Flow trace CSV: header step,loss,cum_seconds,nll,log_w2; steps 1-based;
// off-cadence metric fields empty.
void write_trace_csv(const std::string& path, const FlowTrace& trace);

// Study CSV, long format: study,<param columns>,rep,value (rep 0-based).
void write_study_csv(const std::string& path, const StudyReport& report);

// Grid syntaxes: "a,b,c" explicit values; "a:b:n" n linearly spaced values
// including both endpoints; "a:b:log:n" n log-spaced values (a, b > 0).
std::vector<double> parse_grid(const std::string& text);

// "from:to" integer ramp endpoints (both >= 1).
std::pair<std::size_t, std::size_t> parse_ramp(const std::string& text);

struct GeneratedTarget {
  EmpiricalMeasure measure;
  // Set when the generating density is known in closed form on S^2 (enables
  // likelihood reporting).
  std::optional<VmfMixture> density;
};

// Loads a measure from a generator spec or a CSV file path. Specs:
//   uniform:d=2:n=500
//   vmf:mu=0,0,1:kappa=10:n=500
//   icosa12:kappa=50:n=2400       (12-component mixture on S^2)
// Anything whose leading token is not a known generator is read as a file.
GeneratedTarget load_target(const std::string& spec, Rng& rng);

}  // namespace s3w
