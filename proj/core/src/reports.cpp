#include "frailty/reports.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>

#include <fmt/format.h>

#include "frailty/csv.hpp"
#include "frailty/errors.hpp"

namespace frailty {

namespace {

// In-memory table rendered to both output forms.
struct TableDoc {
  std::string title;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> notes;
};

std::string fmt_num(double v, int precision = 4) {
  return fmt::format("{:.{}f}", v, precision);
}

std::string fmt_pct(double v) { return fmt::format("{:.2f}", v); }

void write_doc(const TableDoc& doc, const std::string& csv_path,
               const std::string& text_path) {
  {
    std::ofstream out(csv_path, std::ios::binary);
    if (!out) throw DataError(fmt::format("cannot write '{}'", csv_path));
    for (std::size_t c = 0; c < doc.header.size(); ++c) {
      if (c) out << ',';
      out << csv_escape(doc.header[c]);
    }
    out << '\n';
    for (const auto& row : doc.rows) {
      for (std::size_t c = 0; c < row.size(); ++c) {
        if (c) out << ',';
        out << csv_escape(row[c]);
      }
      out << '\n';
    }
  }
  {
    std::ofstream out(text_path, std::ios::binary);
    if (!out) throw DataError(fmt::format("cannot write '{}'", text_path));
    out << doc.title << '\n';
    std::vector<std::size_t> width(doc.header.size(), 0);
    for (std::size_t c = 0; c < doc.header.size(); ++c) {
      width[c] = doc.header[c].size();
    }
    for (const auto& row : doc.rows) {
      for (std::size_t c = 0; c < row.size() && c < width.size(); ++c) {
        width[c] = std::max(width[c], row[c].size());
      }
    }
    auto emit_row = [&](const std::vector<std::string>& row) {
      for (std::size_t c = 0; c < width.size(); ++c) {
        const std::string& cell = c < row.size() ? row[c] : std::string();
        if (c) out << "  ";
        if (c == 0) {
          out << fmt::format("{:<{}}", cell, width[c]);
        } else {
          out << fmt::format("{:>{}}", cell, width[c]);
        }
      }
      out << '\n';
    };
    emit_row(doc.header);
    std::size_t total = 0;
    for (std::size_t c = 0; c < width.size(); ++c) total += width[c] + (c ? 2 : 0);
    out << std::string(total, '-') << '\n';
    for (const auto& row : doc.rows) emit_row(row);
    for (const auto& note : doc.notes) out << "# " << note << '\n';
  }
}

TableDoc from_prevalence_table(std::string title, std::string first_column,
                               const PrevalenceTable& table) {
  TableDoc doc;
  doc.title = std::move(title);
  doc.header.push_back(std::move(first_column));
  for (const std::string& c : table.column_labels) doc.header.push_back(c);
  for (std::size_t r = 0; r < table.row_labels.size(); ++r) {
    std::vector<std::string> row{table.row_labels[r]};
    for (double v : table.values[r]) row.push_back(fmt_pct(v));
    doc.rows.push_back(std::move(row));
  }
  return doc;
}

const std::map<std::string, std::string>& alias_map() {
  static const std::map<std::string, std::string> aliases = {
      {"table1", "robustness_inclusion"},
      {"table2", "fi_summary"},
      {"table3", "quartile_profiles"},
      {"table4", "outcome_prevalence_by_quartile"},
      {"table5", "outcome_distribution_across_quartiles"},
      {"table6", "outcome_count_distribution"},
      {"table7", "top_percentile_prevalence"},
      {"table8", "auc_by_outcome"},
      {"table9", "sex_stratified_auc"},
      {"fig2", "fi_histogram"},
      {"fig3", "fi_by_age_sex"},
      {"fig5", "fi_by_disease"},
      {"fig6", "fi_by_comorbidity"},
      {"fig7", "overlap_regions"},
      {"fig8", "fi_by_deprivation"},
  };
  return aliases;
}

std::string canonical_id(const std::string& id) {
  const auto it = alias_map().find(id);
  if (it != alias_map().end()) return it->second;
  return id;
}

void require_base(const ReportInputs& in, const std::string& id) {
  if (!in.cohort || !in.markers || !in.selected || !in.fi) {
    throw DependencyError(
        fmt::format("report '{}' needs the scored cohort (cohort, markers, "
                    "selected set, index values)",
                    id));
  }
  if (in.fi->size() != in.cohort->size()) {
    throw DataError(fmt::format("report '{}': index vector does not match the cohort", id));
  }
}

StratumTable quartiles_of(const ReportInputs& in) {
  static const std::vector<std::uint32_t> empty;
  const std::vector<std::uint32_t>& profile_map =
      in.subject_profile ? *in.subject_profile : empty;
  return stratify_quartiles(*in.fi, profile_map);
}

// --- individual reports ----------------------------------------------------

TableDoc report_robustness_inclusion(const ReportInputs& in) {
  if (!in.robustness) {
    throw DependencyError("report 'robustness_inclusion' needs robustness results");
  }
  const InclusionMatrix& m = *in.robustness;
  TableDoc doc;
  doc.title = "Variable inclusion across robustness runs";
  doc.header.push_back("variable");
  for (const std::string& run : m.runs) doc.header.push_back(run);
  for (std::size_t v = 0; v < m.variables.size(); ++v) {
    std::vector<std::string> row{m.variables[v]};
    for (std::size_t r = 0; r < m.runs.size(); ++r) {
      row.push_back(m.included[v][r] ? "yes" : "no");
    }
    doc.rows.push_back(std::move(row));
  }
  std::vector<std::string> mean_row{"mean_auc"};
  for (double auc : m.mean_auc) mean_row.push_back(fmt_num(auc));
  doc.rows.push_back(std::move(mean_row));
  return doc;
}

TableDoc report_fi_summary(const ReportInputs& in) {
  const FiSummary s = describe_fi(*in.fi);
  TableDoc doc;
  doc.title = "Frailty index distribution";
  doc.header = {"statistic", "value"};
  doc.rows = {
      {"subjects", fmt::format("{}", s.n)},
      {"min", fmt_num(s.min)},
      {"q1", fmt_num(s.q1)},
      {"median", fmt_num(s.median)},
      {"mean", fmt_num(s.mean)},
      {"q3", fmt_num(s.q3)},
      {"max", fmt_num(s.max)},
  };
  return doc;
}

TableDoc report_quartile_profiles(const ReportInputs& in) {
  const StratumTable strata = quartiles_of(in);
  TableDoc doc;
  doc.title = "Frailty index quartiles";
  doc.header = {"stratum", "fi_lo", "fi_hi", "subjects", "profiles"};
  for (const Stratum& s : strata.strata) {
    doc.rows.push_back({s.label, fmt_num(s.lo), fmt_num(s.hi),
                        fmt::format("{}", s.rows.size()),
                        fmt::format("{}", s.n_profiles)});
  }
  if (strata.degenerate) {
    doc.notes.push_back("degenerate: fewer than four distinct index values");
  }
  if (!in.subject_profile) {
    doc.notes.push_back("profile counts unavailable (no profile map provided)");
  }
  return doc;
}

TableDoc report_outcome_prevalence(const ReportInputs& in) {
  return from_prevalence_table(
      "Outcome prevalence (%) overall and by frailty quartile", "outcome",
      outcome_prevalence_by_stratum(*in.cohort, quartiles_of(in)));
}

TableDoc report_outcome_distribution(const ReportInputs& in) {
  TableDoc doc = from_prevalence_table(
      "Share of each outcome's events by frailty quartile (%)", "outcome",
      outcome_distribution_across_strata(*in.cohort, quartiles_of(in)));
  doc.notes.push_back("rows sum to 100");
  return doc;
}

TableDoc report_outcome_counts(const ReportInputs& in) {
  TableDoc doc = from_prevalence_table(
      "Distribution of per-subject outcome counts by frailty quartile (%)",
      "outcomes", outcome_count_distribution(*in.cohort, quartiles_of(in)));
  doc.notes.push_back("columns sum to 100");
  return doc;
}

TableDoc report_top_percentiles(const ReportInputs& in) {
  return from_prevalence_table(
      "Outcome prevalence (%) in the highest index percentiles", "outcome",
      top_percentile_table(*in.cohort, *in.fi));
}

TableDoc report_auc_by_outcome(const ReportInputs& in) {
  if (!in.final_evaluation) {
    throw DependencyError("report 'auc_by_outcome' needs the final model evaluation");
  }
  const SubsetEvaluation& eval = *in.final_evaluation;
  TableDoc doc;
  doc.title = "Discrimination of the final index by outcome";
  doc.header = {"outcome", "auc", "ci_lo", "ci_hi", "subjects", "events", "restricted"};
  for (const OutcomeAuc& o : eval.outcomes) {
    if (!o.included) {
      doc.rows.push_back({to_string(o.outcome), "excluded", "", "",
                          fmt::format("{}", o.eval_subjects),
                          fmt::format("{}", o.cases), o.restricted ? "yes" : "no"});
      continue;
    }
    doc.rows.push_back({to_string(o.outcome), fmt_num(o.result.auc),
                        fmt_num(o.result.ci_lo), fmt_num(o.result.ci_hi),
                        fmt::format("{}", o.eval_subjects),
                        fmt::format("{}", o.cases), o.restricted ? "yes" : "no"});
  }
  doc.rows.push_back({"mean", fmt_num(eval.mean_auc), "", "", "", "", ""});
  return doc;
}

TableDoc report_sex_stratified(const ReportInputs& in) {
  if (!in.sex_report) {
    throw DependencyError("report 'sex_stratified_auc' needs the sex-stratified results");
  }
  TableDoc doc;
  doc.title = "Sex-stratified index: discrimination and agreement with the pooled index";
  doc.header = {"sex", "subjects", "outcome", "auc", "ci_lo", "ci_hi", "rho_vs_pooled"};
  for (const SexStratifiedGroup& g : in.sex_report->groups) {
    const std::string rho =
        g.rho_vs_pooled.defined ? fmt_num(g.rho_vs_pooled.rho) : "undefined";
    for (const OutcomeAuc& o : g.evaluation.outcomes) {
      doc.rows.push_back({to_string(g.sex), fmt::format("{}", g.n),
                          to_string(o.outcome),
                          o.included ? fmt_num(o.result.auc) : "excluded",
                          o.included ? fmt_num(o.result.ci_lo) : "",
                          o.included ? fmt_num(o.result.ci_hi) : "", rho});
    }
    doc.rows.push_back({to_string(g.sex), fmt::format("{}", g.n), "mean",
                        fmt_num(g.evaluation.mean_auc), "", "", rho});
  }
  return doc;
}

TableDoc report_histogram(const ReportInputs& in) {
  TableDoc doc;
  doc.title = "Frailty index histogram (bin width 0.02)";
  doc.header = {"bin_lo", "bin_hi", "count", "share"};
  const std::vector<HistogramBin> bins = fi_histogram(*in.fi);
  const double n = static_cast<double>(in.fi->size());
  for (const HistogramBin& b : bins) {
    doc.rows.push_back({fmt_num(b.lo, 2), fmt_num(b.hi, 2),
                        fmt::format("{}", b.count),
                        fmt_num(static_cast<double>(b.count) / n, 6)});
  }
  return doc;
}

std::string age_class_of(int age) {
  if (age < 70) return "65-69";
  if (age < 75) return "70-74";
  if (age < 80) return "75-79";
  if (age < 85) return "80-84";
  if (age < 90) return "85-89";
  return "90+";
}

TableDoc report_fi_by_age_sex(const ReportInputs& in) {
  std::vector<std::string> groups;
  groups.reserve(in.cohort->size());
  for (const Subject& s : in.cohort->subjects) {
    groups.push_back(fmt::format("{}|{}", age_class_of(s.age_years), to_string(s.sex)));
  }
  TableDoc doc;
  doc.title = "Mean frailty index by age class and sex";
  doc.header = {"group", "statistic", "value", "ci_lo", "ci_hi"};
  for (const GroupSummary& g : fi_by_group(*in.fi, groups)) {
    doc.rows.push_back({g.label, "mean", fmt_num(g.mean),
                        g.has_ci ? fmt_num(g.ci_lo) : "",
                        g.has_ci ? fmt_num(g.ci_hi) : ""});
  }
  return doc;
}

TableDoc report_fi_by_disease(const ReportInputs& in) {
  TableDoc doc;
  doc.title = "Frailty index by presence of each selected condition";
  doc.header = {"group", "statistic", "value", "ci_lo", "ci_hi"};
  for (std::size_t m : *in.selected) {
    const std::vector<std::uint8_t> column = in.markers->column(m);
    std::vector<std::string> groups(column.size());
    for (std::size_t i = 0; i < column.size(); ++i) {
      groups[i] = fmt::format("{}={}", in.markers->names[m],
                              column[i] > 0 ? "present" : "absent");
    }
    for (const GroupSummary& g : fi_by_group(*in.fi, groups)) {
      doc.rows.push_back({g.label, "median", fmt_num(g.median), "", ""});
      doc.rows.push_back({g.label, "q1", fmt_num(g.q1), "", ""});
      doc.rows.push_back({g.label, "q3", fmt_num(g.q3), "", ""});
    }
  }
  return doc;
}

TableDoc report_fi_by_comorbidity(const ReportInputs& in) {
  if (!in.charlson) {
    throw DependencyError("report 'fi_by_comorbidity' needs comorbidity scores");
  }
  if (in.charlson->size() != in.cohort->size()) {
    throw DataError("report 'fi_by_comorbidity': comorbidity scores do not match the cohort");
  }
  std::vector<std::string> groups;
  groups.reserve(in.charlson->size());
  for (const CharlsonResult& c : *in.charlson) {
    groups.push_back(fmt::format("cci_{}", to_string(c.cci_class)));
  }
  TableDoc doc;
  doc.title = "Frailty index by comorbidity class";
  doc.header = {"group", "statistic", "value", "ci_lo", "ci_hi"};
  for (const GroupSummary& g : fi_by_group(*in.fi, groups)) {
    doc.rows.push_back({g.label, "median", fmt_num(g.median), "", ""});
    doc.rows.push_back({g.label, "q1", fmt_num(g.q1), "", ""});
    doc.rows.push_back({g.label, "q3", fmt_num(g.q3), "", ""});
    doc.rows.push_back({g.label, "mean", fmt_num(g.mean),
                        g.has_ci ? fmt_num(g.ci_lo) : "",
                        g.has_ci ? fmt_num(g.ci_hi) : ""});
  }
  return doc;
}

TableDoc report_overlap(const ReportInputs& in) {
  if (!in.charlson) {
    throw DependencyError("report 'overlap_regions' needs comorbidity scores");
  }
  const std::size_t n = in.cohort->size();
  const auto top = static_cast<std::size_t>(
      std::max<long long>(1, static_cast<long long>((n + 9) / 10)));  // ceil(n/10)
  const std::vector<std::uint32_t> frail_rows = top_rows_by_fi(*in.fi, top);
  std::vector<std::uint8_t> frail(n, 0), comorbid(n, 0), disabled(n, 0);
  for (std::uint32_t r : frail_rows) frail[r] = 1;
  for (std::size_t i = 0; i < n; ++i) {
    comorbid[i] = (*in.charlson)[i].cci >= 1;
    const OutcomeVector& v = in.cohort->subjects[i].outcomes;
    disabled[i] =
        in.overlap_baseline_disability_only ? v.baseline_disability : v.disability_prevalent();
  }
  const VennRegions regions = venn_overlap(frail, comorbid, disabled);
  TableDoc doc;
  doc.title = "Overlap of frailty (top 10% index), comorbidity (CCI >= 1) and disability";
  doc.header = {"region", "share_pct"};
  doc.rows = {
      {"frail_only", fmt_pct(regions.a_only)},
      {"comorbid_only", fmt_pct(regions.b_only)},
      {"disabled_only", fmt_pct(regions.c_only)},
      {"frail_comorbid", fmt_pct(regions.ab)},
      {"frail_disabled", fmt_pct(regions.ac)},
      {"comorbid_disabled", fmt_pct(regions.bc)},
      {"frail_comorbid_disabled", fmt_pct(regions.abc)},
      {"none", fmt_pct(regions.none)},
  };
  doc.notes.push_back(in.overlap_baseline_disability_only
                          ? "disability = baseline flag only"
                          : "disability = prevalent (baseline or onset)");
  return doc;
}

TableDoc report_fi_by_deprivation(const ReportInputs& in) {
  if (!in.deprivation || !in.deprivation_assignment) {
    throw DependencyError("report 'fi_by_deprivation' needs the deprivation index");
  }
  const DeprivationAssignment& assignment = *in.deprivation_assignment;
  if (assignment.quintile.size() != in.cohort->size()) {
    throw DataError("report 'fi_by_deprivation': assignment does not match the cohort");
  }
  std::vector<std::string> groups(in.cohort->size());
  for (std::size_t i = 0; i < groups.size(); ++i) {
    if (assignment.quintile[i] > 0) {
      groups[i] = fmt::format("quintile_{}", assignment.quintile[i]);
    }
  }
  TableDoc doc;
  doc.title = "Mean frailty index by deprivation quintile";
  doc.header = {"group", "statistic", "value", "ci_lo", "ci_hi"};
  for (const GroupSummary& g : fi_by_group(*in.fi, groups)) {
    doc.rows.push_back({g.label, "mean", fmt_num(g.mean),
                        g.has_ci ? fmt_num(g.ci_lo) : "",
                        g.has_ci ? fmt_num(g.ci_hi) : ""});
  }
  doc.notes.push_back(
      fmt::format("{} subjects excluded for missing areas", assignment.missing));
  for (const std::string& w : in.deprivation->warnings) doc.notes.push_back(w);
  return doc;
}

}  // namespace

std::vector<std::string> report_ids() {
  return {"robustness_inclusion",
          "fi_summary",
          "quartile_profiles",
          "outcome_prevalence_by_quartile",
          "outcome_distribution_across_quartiles",
          "outcome_count_distribution",
          "top_percentile_prevalence",
          "auc_by_outcome",
          "sex_stratified_auc",
          "fi_histogram",
          "fi_by_age_sex",
          "fi_by_disease",
          "fi_by_comorbidity",
          "overlap_regions",
          "fi_by_deprivation"};
}

bool is_report_id(const std::string& id) {
  const std::string canon = canonical_id(id);
  const std::vector<std::string> ids = report_ids();
  return std::find(ids.begin(), ids.end(), canon) != ids.end();
}

EmittedReport emit_report(const ReportInputs& inputs, const std::string& id,
                          const std::string& out_dir) {
  const std::string canon = canonical_id(id);
  if (!is_report_id(canon)) {
    std::string valid;
    for (const std::string& v : report_ids()) {
      if (!valid.empty()) valid += ", ";
      valid += v;
    }
    throw DataError(fmt::format("unknown report '{}'; valid ids: {}", id, valid));
  }
  require_base(inputs, canon);

  TableDoc doc;
  if (canon == "robustness_inclusion") doc = report_robustness_inclusion(inputs);
  else if (canon == "fi_summary") doc = report_fi_summary(inputs);
  else if (canon == "quartile_profiles") doc = report_quartile_profiles(inputs);
  else if (canon == "outcome_prevalence_by_quartile") doc = report_outcome_prevalence(inputs);
  else if (canon == "outcome_distribution_across_quartiles") doc = report_outcome_distribution(inputs);
  else if (canon == "outcome_count_distribution") doc = report_outcome_counts(inputs);
  else if (canon == "top_percentile_prevalence") doc = report_top_percentiles(inputs);
  else if (canon == "auc_by_outcome") doc = report_auc_by_outcome(inputs);
  else if (canon == "sex_stratified_auc") doc = report_sex_stratified(inputs);
  else if (canon == "fi_histogram") doc = report_histogram(inputs);
  else if (canon == "fi_by_age_sex") doc = report_fi_by_age_sex(inputs);
  else if (canon == "fi_by_disease") doc = report_fi_by_disease(inputs);
  else if (canon == "fi_by_comorbidity") doc = report_fi_by_comorbidity(inputs);
  else if (canon == "overlap_regions") doc = report_overlap(inputs);
  else if (canon == "fi_by_deprivation") doc = report_fi_by_deprivation(inputs);

  std::filesystem::create_directories(out_dir);
  EmittedReport emitted;
  emitted.id = canon;
  emitted.csv_path = (std::filesystem::path(out_dir) / (canon + ".csv")).string();
  emitted.text_path = (std::filesystem::path(out_dir) / (canon + ".txt")).string();
  write_doc(doc, emitted.csv_path, emitted.text_path);
  return emitted;
}

std::vector<EmittedReport> emit_all_reports(const ReportInputs& inputs,
                                            const std::string& out_dir,
                                            std::vector<std::string>* skipped) {
  std::vector<EmittedReport> out;
  for (const std::string& id : report_ids()) {
    const bool missing_optional =
        (id == "robustness_inclusion" && !inputs.robustness) ||
        (id == "sex_stratified_auc" && !inputs.sex_report) ||
        ((id == "fi_by_comorbidity" || id == "overlap_regions") && !inputs.charlson) ||
        (id == "fi_by_deprivation" &&
         (!inputs.deprivation || !inputs.deprivation_assignment)) ||
        (id == "auc_by_outcome" && !inputs.final_evaluation);
    if (missing_optional) {
      if (skipped) {
        skipped->push_back(fmt::format("{}: optional inputs not available", id));
      }
      continue;
    }
    out.push_back(emit_report(inputs, id, out_dir));
  }
  return out;
}

}  // namespace frailty
