#include "frailty/stability.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "frailty/errors.hpp"

namespace frailty {

StabilityReport stability_metrics(const std::vector<SubjectId>& ids1,
                                  const std::vector<double>& fi1,
                                  const std::vector<Profile>& profiles1,
                                  const std::vector<SubjectId>& ids2,
                                  const std::vector<double>& fi2,
                                  const std::vector<Profile>& profiles2) {
  if (ids1.size() != fi1.size() || ids1.size() != profiles1.size()) {
    throw DataError("stability metrics: first cohort vectors differ in length");
  }
  if (ids2.size() != fi2.size() || ids2.size() != profiles2.size()) {
    throw DataError("stability metrics: second cohort vectors differ in length");
  }

  std::map<SubjectId, std::size_t> where2;
  for (std::size_t i = 0; i < ids2.size(); ++i) where2.emplace(ids2[i], i);

  std::vector<double> x_all, y_all, x_stable, y_stable, x_changed, y_changed;
  for (std::size_t i = 0; i < ids1.size(); ++i) {
    const auto it = where2.find(ids1[i]);
    if (it == where2.end()) continue;
    const std::size_t j = it->second;
    x_all.push_back(fi1[i]);
    y_all.push_back(fi2[j]);
    if (profiles1[i] == profiles2[j]) {
      x_stable.push_back(fi1[i]);
      y_stable.push_back(fi2[j]);
    } else {
      x_changed.push_back(fi1[i]);
      y_changed.push_back(fi2[j]);
    }
  }
  if (x_all.size() < 3) {
    throw DataError("stability metrics: fewer than three shared subjects");
  }

  StabilityReport report;
  report.shared = x_all.size();
  report.stable = x_stable.size();
  report.changed = x_changed.size();
  report.overall = spearman(x_all, y_all);
  report.stable_subjects = spearman(x_stable, y_stable);
  report.changed_subjects = spearman(x_changed, y_changed);
  return report;
}

SexStratifiedReport sex_stratified_fi(const Cohort& cohort, const MarkerData& data,
                                      const std::vector<std::size_t>& markers,
                                      const std::vector<double>& pooled_fi,
                                      const RankOptions& rank) {
  if (pooled_fi.size() != cohort.size()) {
    throw DataError("sex-stratified index: pooled index does not match the cohort");
  }
  SexStratifiedReport report;
  for (Sex sex : {Sex::Female, Sex::Male}) {
    std::vector<std::uint32_t> rows;
    for (std::size_t i = 0; i < cohort.size(); ++i) {
      if (cohort.subjects[i].sex == sex) rows.push_back(static_cast<std::uint32_t>(i));
    }
    if (rows.empty()) continue;

    SexStratifiedGroup group;
    group.sex = sex;
    group.n = rows.size();
    group.evaluation =
        evaluate_marker_subset(cohort, data, markers, rank, &rows, nullptr);

    const FrailtyScore score = score_markers(data, markers, rank, &rows);
    std::vector<double> pooled_subset;
    pooled_subset.reserve(rows.size());
    for (std::uint32_t r : rows) pooled_subset.push_back(pooled_fi[r]);
    group.rho_vs_pooled = spearman(score.fi, pooled_subset);
    report.groups.push_back(std::move(group));
  }
  return report;
}

}  // namespace frailty
