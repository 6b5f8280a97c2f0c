#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "frailty/selection.hpp"
#include "frailty/stats.hpp"

namespace frailty {

// Cross-cohort index stability over the subjects present in both cohorts,
// overall and split by whether the subject's marker profile changed.
struct StabilityReport {
  std::size_t shared = 0;
  std::size_t stable = 0;   // identical profile in both cohorts
  std::size_t changed = 0;
  SpearmanResult overall;
  SpearmanResult stable_subjects;
  SpearmanResult changed_subjects;
};

StabilityReport stability_metrics(const std::vector<SubjectId>& ids1,
                                  const std::vector<double>& fi1,
                                  const std::vector<Profile>& profiles1,
                                  const std::vector<SubjectId>& ids2,
                                  const std::vector<double>& fi2,
                                  const std::vector<Profile>& profiles2);

// Index recomputed inside one sex subgroup, compared against the pooled
// index, plus the subgroup's per-outcome AUC table.
struct SexStratifiedGroup {
  Sex sex = Sex::Female;
  std::size_t n = 0;
  SpearmanResult rho_vs_pooled;  // subgroup index vs pooled index, same rows
  SubsetEvaluation evaluation;   // AUCs of the subgroup-specific index
};

struct SexStratifiedReport {
  std::vector<SexStratifiedGroup> groups;  // female, then male
};

SexStratifiedReport sex_stratified_fi(const Cohort& cohort, const MarkerData& data,
                                      const std::vector<std::size_t>& markers,
                                      const std::vector<double>& pooled_fi,
                                      const RankOptions& rank);

}  // namespace frailty
