#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "frailty/cohort.hpp"
#include "frailty/markers.hpp"

namespace frailty {

// One CSV per flow; empty path = flow not available. Expected headers:
//   registry:   subject_id,sex,birth_date,death_date,area_id
//   discharge:  subject_id,date,duration,dx1..dx6
//   er:         subject_id,date,priority,dx1..dx5
//   psychiatry: subject_id,date,dx1..dx3
//   home_care:  subject_id,date,service_code
//   exemption:  subject_id,date,exemption_code,diagnosis
//   pharma:     subject_id,date,atc
//   outpatient: subject_id,date,service_code
// Dates are ISO (YYYY-MM-DD); death_date, area_id, diagnosis and trailing dx
// columns may be empty.
struct FlowPaths {
  std::string registry;
  std::string discharge;
  std::string er;
  std::string psychiatry;
  std::string home_care;
  std::string exemption;
  std::string pharma;
  std::string outpatient;
};

enum class RowPolicy {
  SkipAndLog,  // malformed rows are counted and reported, parsing continues
  Abort,       // first malformed row raises DataError
};

struct IngestStats {
  std::size_t registry_rows = 0;
  std::size_t subjects = 0;            // eligible subjects kept
  std::size_t under_age = 0;           // registry rows below the minimum age
  std::size_t dead_before_index = 0;   // died on or before the baseline end
  std::size_t clinical_rows = 0;
  std::size_t baseline_records = 0;
  std::size_t outcome_records = 0;
  std::size_t outside_window = 0;      // dated records in neither window
  std::size_t orphan_records = 0;      // clinical rows without a registry match
  std::size_t malformed_rows = 0;
  std::vector<std::string> row_errors; // "<file>:<line>: <message>" per skip
};

// Reads the registry plus any provided clinical flows into a cohort whose
// baseline_records/outcome_records are partitioned by the observation windows
// of `spec`. Subjects are ordered by subject id. Throws DataError on missing
// registry, unreadable files, bad headers, or (under RowPolicy::Abort) the
// first malformed row.
Cohort load_flows(const FlowPaths& paths, const CohortSpec& spec,
                  RowPolicy policy = RowPolicy::SkipAndLog,
                  IngestStats* stats = nullptr);

// Writes one CSV per flow from an in-memory cohort (inverse of load_flows,
// used by the synthetic generator and the tests).
void write_flows(const Cohort& cohort, const FlowPaths& paths);

// How outcome-year records map to the six adverse outcomes. Death comes from
// the registry death date and hospitalisation from the presence of any
// outcome-year discharge record; the rest are configured here.
struct OutcomeConfig {
  std::vector<CodePattern> femur_fracture;
  std::vector<CodePattern> disability;   // also defines baseline disability
  std::vector<CodePattern> dementia;     // also defines baseline dementia
  std::string er_priority_key = "priority";
  std::string er_priority_value = "red"; // highest-priority triage class
};

OutcomeConfig default_outcome_config();
OutcomeConfig parse_outcome_config(const std::string& json_text);
OutcomeConfig load_outcome_config(const std::string& path);
std::string outcome_config_to_json(const OutcomeConfig& config);

// Fills every subject's OutcomeVector from its outcome-year records, death
// date, and baseline condition flags. Onset outcomes are false whenever the
// baseline flag is set. Throws DataError when a subject's death date lies on
// or before the baseline end (such a subject cannot be in the cohort).
void link_outcomes(Cohort& cohort, const OutcomeConfig& config);

}  // namespace frailty
