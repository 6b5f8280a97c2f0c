#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "frailty/cohort.hpp"

namespace frailty {

// Order statistics of a frailty-index vector. Quartiles use the common
// linear-interpolation rule (quantile at p sits at position (n-1)*p of the
// sorted sample, interpolated between neighbours).
struct FiSummary {
  std::size_t n = 0;
  double min = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double mean = 0.0;
  double q3 = 0.0;
  double max = 0.0;
};

FiSummary describe_fi(const std::vector<double>& fi);

struct HistogramBin {
  double lo = 0.0;  // [lo, hi); the last bin is closed on both sides
  double hi = 0.0;
  std::size_t count = 0;
};

// Fixed-width bins covering [0, 1]; values outside are clamped into the
// first/last bin.
std::vector<HistogramBin> fi_histogram(const std::vector<double>& fi,
                                       double bin_width = 0.02);

// One frailty stratum: subjects with lo < FI <= hi (the lowest stratum also
// includes FI == lo).
struct Stratum {
  std::string label;
  double lo = 0.0;
  double hi = 0.0;
  std::vector<std::uint32_t> rows;  // subject rows, ascending
  std::size_t n_profiles = 0;       // distinct profiles among those rows
};

struct StratumTable {
  std::vector<Stratum> strata;
  std::vector<double> cuts;  // the three interior quartile cut points
  bool degenerate = false;   // fewer than 4 distinct index values
};

// Splits subjects into quartile strata of the index. Subjects whose index
// equals a cut point fall into the lower stratum. `subject_profile` maps each
// row to its profile (as produced by the poset build) and feeds the
// per-stratum distinct-profile counts.
StratumTable stratify_quartiles(const std::vector<double>& fi,
                                const std::vector<std::uint32_t>& subject_profile);

// Per-stratum outcome prevalence (the first column covers the whole cohort).
// Disability and dementia count prevalent cases: baseline or new onset.
struct PrevalenceTable {
  std::vector<std::string> row_labels;      // one per outcome
  std::vector<std::string> column_labels;   // "all" plus one per stratum
  std::vector<std::vector<double>> values;  // percentages, [row][column]
};

// Reported outcomes, in table order: the six outcomes with disability and
// dementia in their prevalent form.
std::vector<std::string> outcome_table_labels();
bool outcome_table_flag(const OutcomeVector& v, std::size_t row);

// Outcome prevalence within each stratum (and overall).
PrevalenceTable outcome_prevalence_by_stratum(const Cohort& cohort,
                                              const StratumTable& strata);

// Share of each outcome's events falling into each stratum; rows sum to 100.
PrevalenceTable outcome_distribution_across_strata(const Cohort& cohort,
                                                   const StratumTable& strata);

// Distribution of the per-subject outcome count (0..6) within each stratum
// (and overall); columns sum to 100.
PrevalenceTable outcome_count_distribution(const Cohort& cohort,
                                           const StratumTable& strata);

// The `count` highest-index subjects; boundary ties resolve by index
// descending, then subject row ascending.
std::vector<std::uint32_t> top_rows_by_fi(const std::vector<double>& fi,
                                          std::size_t count);

// Outcome prevalence among the top t% of the index, for each threshold
// (percent values, e.g. {25, 10, 5, 2, 1}); the selected group has
// ceil(t/100 * n) subjects.
PrevalenceTable top_percentile_table(const Cohort& cohort, const std::vector<double>& fi,
                                     const std::vector<double>& thresholds = {25, 10, 5,
                                                                              2, 1});

// Summary of the index within one group of subjects.
struct GroupSummary {
  std::string label;
  std::size_t n = 0;
  double median = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
  double mean = 0.0;
  double ci_lo = 0.0;  // mean +- 1.96 * sd / sqrt(n)
  double ci_hi = 0.0;
  bool has_ci = false;  // false when n < 2
};

// Groups subjects by label and summarizes the index per group; groups are
// returned label-sorted. Rows with an empty label are skipped.
std::vector<GroupSummary> fi_by_group(const std::vector<double>& fi,
                                      const std::vector<std::string>& group);

// Overlap of three subject flags as percentages of the cohort: every
// intersection region plus the none-region; sums to 100.
struct VennRegions {
  double none = 0.0;
  double a_only = 0.0;
  double b_only = 0.0;
  double c_only = 0.0;
  double ab = 0.0;
  double ac = 0.0;
  double bc = 0.0;
  double abc = 0.0;
};

VennRegions venn_overlap(const std::vector<std::uint8_t>& a,
                         const std::vector<std::uint8_t>& b,
                         const std::vector<std::uint8_t>& c);

}  // namespace frailty
