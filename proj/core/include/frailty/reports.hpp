#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "frailty/charlson.hpp"
#include "frailty/cohort.hpp"
#include "frailty/deprivation.hpp"
#include "frailty/markers.hpp"
#include "frailty/robustness.hpp"
#include "frailty/selection.hpp"
#include "frailty/stability.hpp"
#include "frailty/stratify.hpp"

namespace frailty {

// Everything the report emitters can draw on. The first four fields are
// required by every report; the rest are needed only by specific ids and
// a missing one raises DependencyError naming the report.
struct ReportInputs {
  const Cohort* cohort = nullptr;
  const MarkerData* markers = nullptr;
  const std::vector<std::size_t>* selected = nullptr;  // final marker set
  const std::vector<double>* fi = nullptr;             // per subject

  const std::vector<std::uint32_t>* subject_profile = nullptr;  // row -> profile
  const SubsetEvaluation* final_evaluation = nullptr;           // auc_by_outcome
  const InclusionMatrix* robustness = nullptr;                  // robustness_inclusion
  const std::vector<CharlsonResult>* charlson = nullptr;        // comorbidity reports
  const DeprivationIndex* deprivation = nullptr;                // deprivation report
  const DeprivationAssignment* deprivation_assignment = nullptr;
  const SexStratifiedReport* sex_report = nullptr;              // sex_stratified

  // The overlap report's "disabled" circle: prevalent disability by default,
  // baseline-only when set (both definitions appear in practice).
  bool overlap_baseline_disability_only = false;
};

// One emitted report: a machine CSV plus an aligned-text rendering.
struct EmittedReport {
  std::string id;
  std::string csv_path;
  std::string text_path;
};

// All report ids, in emission order.
std::vector<std::string> report_ids();

// True when `id` is a known report.
bool is_report_id(const std::string& id);

// Writes <id>.csv and <id>.txt under out_dir. Throws DataError for unknown
// ids (listing the valid ones) and DependencyError when a required input is
// missing from `inputs`.
EmittedReport emit_report(const ReportInputs& inputs, const std::string& id,
                          const std::string& out_dir);

// Emits every report whose optional inputs are present; reports with missing
// optional inputs are skipped and listed in `skipped` (with the reason).
std::vector<EmittedReport> emit_all_reports(
    const ReportInputs& inputs, const std::string& out_dir,
    std::vector<std::string>* skipped = nullptr);

}  // namespace frailty
