#include "frailty/stratify.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include <fmt/format.h>

#include "frailty/errors.hpp"

namespace frailty {

namespace {

// Linear-interpolation quantile on an already sorted sample.
double quantile_sorted(const std::vector<double>& sorted, double p) {
  const std::size_t n = sorted.size();
  if (n == 1) return sorted[0];
  const double pos = p * static_cast<double>(n - 1);
  const auto lo = static_cast<std::size_t>(pos);
  const std::size_t hi = std::min(lo + 1, n - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

}  // namespace

FiSummary describe_fi(const std::vector<double>& fi) {
  if (fi.empty()) throw DataError("describe_fi: empty index vector");
  std::vector<double> sorted = fi;
  std::sort(sorted.begin(), sorted.end());
  FiSummary s;
  s.n = sorted.size();
  s.min = sorted.front();
  s.max = sorted.back();
  s.q1 = quantile_sorted(sorted, 0.25);
  s.median = quantile_sorted(sorted, 0.5);
  s.q3 = quantile_sorted(sorted, 0.75);
  double total = 0.0;
  for (double v : sorted) total += v;
  s.mean = total / static_cast<double>(s.n);
  return s;
}

std::vector<HistogramBin> fi_histogram(const std::vector<double>& fi, double bin_width) {
  if (fi.empty()) throw DataError("fi_histogram: empty index vector");
  if (!(bin_width > 0.0) || bin_width > 1.0) {
    throw DataError("fi_histogram: bin width must lie in (0, 1]");
  }
  const auto bins = static_cast<std::size_t>(std::ceil(1.0 / bin_width - 1e-12));
  std::vector<HistogramBin> out(bins);
  for (std::size_t b = 0; b < bins; ++b) {
    out[b].lo = static_cast<double>(b) * bin_width;
    out[b].hi = b + 1 == bins ? 1.0 : static_cast<double>(b + 1) * bin_width;
  }
  for (double v : fi) {
    auto b = static_cast<long long>(std::floor(v / bin_width));
    b = std::clamp<long long>(b, 0, static_cast<long long>(bins) - 1);
    ++out[static_cast<std::size_t>(b)].count;
  }
  return out;
}

StratumTable stratify_quartiles(const std::vector<double>& fi,
                                const std::vector<std::uint32_t>& subject_profile) {
  if (fi.empty()) throw DataError("stratify_quartiles: empty index vector");
  if (!subject_profile.empty() && subject_profile.size() != fi.size()) {
    throw DataError("stratify_quartiles: profile map does not match the index vector");
  }

  std::vector<double> sorted = fi;
  std::sort(sorted.begin(), sorted.end());

  StratumTable table;
  table.cuts = {quantile_sorted(sorted, 0.25), quantile_sorted(sorted, 0.5),
                quantile_sorted(sorted, 0.75)};
  const std::set<double> distinct(sorted.begin(), sorted.end());
  table.degenerate = distinct.size() < 4;

  const double lo = sorted.front();
  const double hi = sorted.back();
  const std::vector<std::pair<double, double>> ranges = {
      {lo, table.cuts[0]},
      {table.cuts[0], table.cuts[1]},
      {table.cuts[1], table.cuts[2]},
      {table.cuts[2], hi},
  };
  for (std::size_t q = 0; q < 4; ++q) {
    Stratum stratum;
    stratum.label = fmt::format("Q{}", q + 1);
    stratum.lo = ranges[q].first;
    stratum.hi = ranges[q].second;
    table.strata.push_back(std::move(stratum));
  }

  for (std::size_t i = 0; i < fi.size(); ++i) {
    std::size_t q = 0;
    // (lo, hi] intervals: a value equal to a cut stays in the lower stratum.
    while (q < 3 && fi[i] > table.cuts[q]) ++q;
    table.strata[q].rows.push_back(static_cast<std::uint32_t>(i));
  }

  for (Stratum& stratum : table.strata) {
    if (subject_profile.empty()) continue;
    std::set<std::uint32_t> profiles;
    for (std::uint32_t row : stratum.rows) profiles.insert(subject_profile[row]);
    stratum.n_profiles = profiles.size();
  }
  return table;
}

std::vector<std::string> outcome_table_labels() {
  return {"death",          "er_red_code",        "hospitalisation",
          "disability",     "dementia",           "femur_fracture"};
}

bool outcome_table_flag(const OutcomeVector& v, std::size_t row) {
  switch (row) {
    case 0: return v.death;
    case 1: return v.er_red_code;
    case 2: return v.hospitalisation;
    case 3: return v.disability_prevalent();
    case 4: return v.dementia_prevalent();
    case 5: return v.femur_fracture;
    default: throw DataError("outcome_table_flag: row out of range");
  }
}

namespace {

std::vector<std::string> stratum_columns(const StratumTable& strata, bool with_all) {
  std::vector<std::string> cols;
  if (with_all) cols.push_back("all");
  for (const Stratum& s : strata.strata) cols.push_back(s.label);
  return cols;
}

}  // namespace

PrevalenceTable outcome_prevalence_by_stratum(const Cohort& cohort,
                                              const StratumTable& strata) {
  PrevalenceTable table;
  table.row_labels = outcome_table_labels();
  table.column_labels = stratum_columns(strata, true);
  const std::size_t n = cohort.size();
  for (std::size_t row = 0; row < table.row_labels.size(); ++row) {
    std::vector<double> values;
    std::size_t total = 0;
    for (const Subject& s : cohort.subjects) total += outcome_table_flag(s.outcomes, row);
    values.push_back(n == 0 ? 0.0 : 100.0 * static_cast<double>(total) / static_cast<double>(n));
    for (const Stratum& stratum : strata.strata) {
      std::size_t events = 0;
      for (std::uint32_t r : stratum.rows) {
        events += outcome_table_flag(cohort.subjects[r].outcomes, row);
      }
      values.push_back(stratum.rows.empty()
                           ? 0.0
                           : 100.0 * static_cast<double>(events) /
                                 static_cast<double>(stratum.rows.size()));
    }
    table.values.push_back(std::move(values));
  }
  return table;
}

PrevalenceTable outcome_distribution_across_strata(const Cohort& cohort,
                                                   const StratumTable& strata) {
  PrevalenceTable table;
  table.row_labels = outcome_table_labels();
  table.column_labels = stratum_columns(strata, false);
  for (std::size_t row = 0; row < table.row_labels.size(); ++row) {
    std::vector<std::size_t> events(strata.strata.size(), 0);
    std::size_t total = 0;
    for (std::size_t q = 0; q < strata.strata.size(); ++q) {
      for (std::uint32_t r : strata.strata[q].rows) {
        const bool flag = outcome_table_flag(cohort.subjects[r].outcomes, row);
        events[q] += flag;
        total += flag;
      }
    }
    std::vector<double> values;
    for (std::size_t q = 0; q < strata.strata.size(); ++q) {
      values.push_back(total == 0 ? 0.0
                                  : 100.0 * static_cast<double>(events[q]) /
                                        static_cast<double>(total));
    }
    table.values.push_back(std::move(values));
  }
  return table;
}

PrevalenceTable outcome_count_distribution(const Cohort& cohort,
                                           const StratumTable& strata) {
  PrevalenceTable table;
  const std::size_t n_outcomes = outcome_table_labels().size();
  for (std::size_t k = 0; k <= n_outcomes; ++k) {
    table.row_labels.push_back(fmt::format("{}", k));
  }
  table.column_labels = stratum_columns(strata, true);

  auto outcome_count = [&](const Subject& s) {
    std::size_t count = 0;
    for (std::size_t row = 0; row < n_outcomes; ++row) {
      count += outcome_table_flag(s.outcomes, row);
    }
    return count;
  };

  std::vector<std::vector<double>> cells(n_outcomes + 1,
                                         std::vector<double>(table.column_labels.size(), 0.0));
  std::vector<std::size_t> overall(n_outcomes + 1, 0);
  for (const Subject& s : cohort.subjects) ++overall[outcome_count(s)];
  for (std::size_t k = 0; k <= n_outcomes; ++k) {
    cells[k][0] = cohort.size() == 0 ? 0.0
                                     : 100.0 * static_cast<double>(overall[k]) /
                                           static_cast<double>(cohort.size());
  }
  for (std::size_t q = 0; q < strata.strata.size(); ++q) {
    std::vector<std::size_t> counts(n_outcomes + 1, 0);
    for (std::uint32_t r : strata.strata[q].rows) {
      ++counts[outcome_count(cohort.subjects[r])];
    }
    for (std::size_t k = 0; k <= n_outcomes; ++k) {
      cells[k][q + 1] = strata.strata[q].rows.empty()
                            ? 0.0
                            : 100.0 * static_cast<double>(counts[k]) /
                                  static_cast<double>(strata.strata[q].rows.size());
    }
  }
  table.values = std::move(cells);
  return table;
}

std::vector<std::uint32_t> top_rows_by_fi(const std::vector<double>& fi,
                                          std::size_t count) {
  std::vector<std::uint32_t> order(fi.size());
  for (std::size_t i = 0; i < fi.size(); ++i) order[i] = static_cast<std::uint32_t>(i);
  std::stable_sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
    if (fi[a] != fi[b]) return fi[a] > fi[b];
    return a < b;
  });
  order.resize(std::min(count, order.size()));
  return order;
}

PrevalenceTable top_percentile_table(const Cohort& cohort, const std::vector<double>& fi,
                                     const std::vector<double>& thresholds) {
  if (fi.size() != cohort.size()) {
    throw DataError("top_percentile_table: index vector does not match the cohort");
  }
  if (cohort.size() == 0) throw DataError("top_percentile_table: empty cohort");
  PrevalenceTable table;
  table.row_labels = outcome_table_labels();
  for (double t : thresholds) {
    if (!(t > 0.0) || t > 100.0) {
      throw DataError("top_percentile_table: thresholds are percentages in (0, 100]");
    }
    table.column_labels.push_back(fmt::format("top{:g}%", t));
  }
  table.values.assign(table.row_labels.size(),
                      std::vector<double>(thresholds.size(), 0.0));
  for (std::size_t c = 0; c < thresholds.size(); ++c) {
    const auto count = static_cast<std::size_t>(std::ceil(
        thresholds[c] / 100.0 * static_cast<double>(cohort.size()) - 1e-12));
    const std::vector<std::uint32_t> rows = top_rows_by_fi(fi, std::max<std::size_t>(count, 1));
    for (std::size_t row = 0; row < table.row_labels.size(); ++row) {
      std::size_t events = 0;
      for (std::uint32_t r : rows) {
        events += outcome_table_flag(cohort.subjects[r].outcomes, row);
      }
      table.values[row][c] =
          100.0 * static_cast<double>(events) / static_cast<double>(rows.size());
    }
  }
  return table;
}

std::vector<GroupSummary> fi_by_group(const std::vector<double>& fi,
                                      const std::vector<std::string>& group) {
  if (fi.size() != group.size()) {
    throw DataError("fi_by_group: group labels do not match the index vector");
  }
  std::map<std::string, std::vector<double>> buckets;
  for (std::size_t i = 0; i < fi.size(); ++i) {
    if (group[i].empty()) continue;
    buckets[group[i]].push_back(fi[i]);
  }
  std::vector<GroupSummary> out;
  for (auto& [label, values] : buckets) {
    std::sort(values.begin(), values.end());
    GroupSummary g;
    g.label = label;
    g.n = values.size();
    g.median = quantile_sorted(values, 0.5);
    g.q1 = quantile_sorted(values, 0.25);
    g.q3 = quantile_sorted(values, 0.75);
    double total = 0.0;
    for (double v : values) total += v;
    g.mean = total / static_cast<double>(g.n);
    if (g.n >= 2) {
      double ss = 0.0;
      for (double v : values) ss += (v - g.mean) * (v - g.mean);
      const double sd = std::sqrt(ss / static_cast<double>(g.n - 1));
      const double half = 1.96 * sd / std::sqrt(static_cast<double>(g.n));
      g.ci_lo = g.mean - half;
      g.ci_hi = g.mean + half;
      g.has_ci = true;
    } else {
      g.ci_lo = g.mean;
      g.ci_hi = g.mean;
      g.has_ci = false;
    }
    out.push_back(std::move(g));
  }
  return out;
}

VennRegions venn_overlap(const std::vector<std::uint8_t>& a,
                         const std::vector<std::uint8_t>& b,
                         const std::vector<std::uint8_t>& c) {
  if (a.size() != b.size() || a.size() != c.size()) {
    throw DataError("venn_overlap: flag vectors differ in length");
  }
  if (a.empty()) throw DataError("venn_overlap: empty flag vectors");
  std::size_t counts[8] = {0};
  for (std::size_t i = 0; i < a.size(); ++i) {
    const int key = (a[i] ? 1 : 0) | (b[i] ? 2 : 0) | (c[i] ? 4 : 0);
    ++counts[key];
  }
  const double n = static_cast<double>(a.size());
  VennRegions v;
  v.none = 100.0 * static_cast<double>(counts[0]) / n;
  v.a_only = 100.0 * static_cast<double>(counts[1]) / n;
  v.b_only = 100.0 * static_cast<double>(counts[2]) / n;
  v.ab = 100.0 * static_cast<double>(counts[3]) / n;
  v.c_only = 100.0 * static_cast<double>(counts[4]) / n;
  v.ac = 100.0 * static_cast<double>(counts[5]) / n;
  v.bc = 100.0 * static_cast<double>(counts[6]) / n;
  v.abc = 100.0 * static_cast<double>(counts[7]) / n;
  return v;
}

}  // namespace frailty
