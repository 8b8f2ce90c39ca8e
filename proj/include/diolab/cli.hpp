// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "diolab/rational.hpp"
#include "diolab/scenarios.hpp"

namespace diolab::cli {

// One experiment invocation: a subcommand plus the flag values it reads.
// Field names double as config-file keys and long-option names, so a file
// produced by render_config reruns the experiment byte for byte.
struct ExperimentConfig {
  std::string subcommand;
  long q = 0;               // single index (measure, equidist, divisors)
  long Q = 0;               // sweep bound (overlap, bc, yu, uniformity, ...)
  std::vector<long> Qgrid;  // evaluation grid (qia, baseline, multi-row ops)
  std::string gamma = "const:0";
  std::string psi = "recip";
  std::string partition = "residues:2";
  std::optional<std::uint64_t> seed;  // mandatory once anything randomizes
  long alphas = 50;                   // counting: number of sampled alpha
  std::string delta = "1/5";          // counting window exponent (lemn)
  std::string ulo = "3/10";           // uniformity window [ulo, uhi)
  std::string uhi = "2/5";
  std::string metric;          // baseline: "qia" | "lemn"
  std::string mode = "record"; // baseline: "record" | "compare"
  long precision = 128;
  long threads = 1;
  std::string out;       // CSV destination; empty means stdout
  std::string baseline;  // baseline file path

  bool operator==(const ExperimentConfig&) const = default;
};

// Flat "key=value" rendering, every key present, fixed order, LF endings.
std::string render_config(const ExperimentConfig& cfg);

// Inverse of render_config. Blank lines and '#' comments are skipped,
// omitted keys keep their defaults, unknown keys raise UsageError.
// parse_config(render_config(c)) == c for every c.
ExperimentConfig parse_config(const std::string& text);

// One Overlap Lemma row, saturation aware: a scale with 2 psi > 1 covers
// the circle up to a null set, so the intersection collapses to the smaller
// member's measure; otherwise both sides come from overlap_bound_check.
// verdict false means the unconditional bound failed, a library bug.
struct OverlapRow {
  long q = 0, r = 0;
  Rational meas, bound;
  bool verdict = true;
};

OverlapRow overlap_row(long q, long r, const PsiSpec& psi, const TargetSeq& gamma);

// Runs cfg, writing the CSV to `out` and diagnostics to `err`. Returns 0 on
// success, 1 on usage or precision failures, 2 exactly when an unconditional
// bound came out false.
int run_experiment(const ExperimentConfig& cfg, std::ostream& out, std::ostream& err);

}  // namespace diolab::cli
