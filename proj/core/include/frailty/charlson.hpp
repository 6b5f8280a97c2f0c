#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "frailty/cohort.hpp"
#include "frailty/markers.hpp"

namespace frailty {

// One comorbidity of the Deyo ICD-9-CM adaptation of the Charlson index.
struct DeyoCondition {
  std::string name;
  int weight = 1;  // 1, 2, 3 or 6
  std::vector<CodeConstraint> codes;
};

struct DeyoMap {
  std::vector<DeyoCondition> conditions;
};

// The standard Deyo table (17 conditions, weights 1-6), shipped as a config
// file so local coding practice can amend it.
DeyoMap default_deyo_map();
DeyoMap parse_deyo_map(const std::string& json_text);  // throws DataError
DeyoMap load_deyo_map(const std::string& path);        // throws DataError
std::string deyo_map_to_json(const DeyoMap& map);

enum class CciClass : std::uint8_t { Zero, One, Two, ThreePlus };
const char* to_string(CciClass value);
CciClass cci_class_of(int cci);

struct CharlsonResult {
  std::vector<int> admission_scores;  // one per outcome-year hospitalisation
  int cci = 0;                        // max over the admissions; 0 when none
  CciClass cci_class = CciClass::Zero;
};

// Scores one admission: the weights of the distinct conditions matched among
// its concomitant diagnoses (positions >= 1; the primary diagnosis does not
// count). Codes matching no condition are ignored.
int charlson_admission_score(const FlowRecord& discharge, const DeyoMap& map);

// Per-subject comorbidity from the outcome-year hospital discharges.
CharlsonResult charlson_score(const Subject& subject, const DeyoMap& map);
std::vector<CharlsonResult> charlson_scores(const Cohort& cohort, const DeyoMap& map);

}  // namespace frailty
