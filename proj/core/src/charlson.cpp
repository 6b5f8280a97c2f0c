#include "frailty/charlson.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "frailty/errors.hpp"
#include "marker_json.hpp"

namespace frailty {

namespace {

using nlohmann::json;

CodeConstraint icd9_prefix(std::vector<std::string> values) {
  CodeConstraint c;
  c.system = CodeSystem::Icd9Cm;
  c.match = MatchRule::Prefix;
  c.values = std::move(values);
  return c;
}

CodeConstraint icd9_range(long lo, long hi, int digits = 3) {
  CodeConstraint c;
  c.system = CodeSystem::Icd9Cm;
  c.match = MatchRule::NumericRange;
  c.range_lo = lo;
  c.range_hi = hi;
  c.range_digits = digits;
  return c;
}

}  // namespace

DeyoMap default_deyo_map() {
  DeyoMap map;
  map.conditions = {
      {"myocardial_infarction", 1, {icd9_range(410, 410), icd9_prefix({"412"})}},
      {"congestive_heart_failure", 1, {icd9_range(428, 428)}},
      {"peripheral_vascular_disease",
       1,
       {icd9_range(441, 441), icd9_prefix({"4439", "7854", "V434"})}},
      {"cerebrovascular_disease", 1, {icd9_range(430, 438)}},
      {"dementia", 1, {icd9_range(290, 290)}},
      {"chronic_pulmonary_disease", 1, {icd9_range(490, 505), icd9_prefix({"5064"})}},
      {"rheumatologic_disease",
       1,
       {icd9_prefix({"7100", "7101", "7104", "7140", "7141", "7142", "71481", "725"})}},
      {"peptic_ulcer_disease", 1, {icd9_range(531, 534)}},
      {"mild_liver_disease", 1, {icd9_prefix({"5712", "5714", "5715", "5716"})}},
      {"diabetes", 1, {icd9_range(2500, 2503, 4), icd9_prefix({"2507"})}},
      {"diabetes_with_chronic_complications", 2, {icd9_range(2504, 2506, 4)}},
      {"hemiplegia_paraplegia", 2, {icd9_range(342, 342), icd9_prefix({"3441"})}},
      {"renal_disease",
       2,
       {icd9_range(582, 582), icd9_range(585, 586),
        icd9_prefix({"5830", "5831", "5832", "5833", "5834", "5835", "5836", "5837",
                     "5880", "V420", "V451", "V56"})}},
      {"any_malignancy", 2,
       {icd9_range(140, 172), icd9_range(174, 195), icd9_range(200, 208)}},
      {"moderate_severe_liver_disease",
       3,
       {icd9_prefix({"5722", "5723", "5724", "5728", "4560", "4561", "4562"})}},
      {"metastatic_solid_tumor", 6, {icd9_range(196, 199)}},
      {"aids", 6, {icd9_range(42, 44)}},
  };
  return map;
}

std::string deyo_map_to_json(const DeyoMap& map) {
  json root;
  json conditions = json::array();
  for (const DeyoCondition& c : map.conditions) {
    json entry;
    entry["name"] = c.name;
    entry["weight"] = c.weight;
    json codes = json::array();
    for (const CodeConstraint& constraint : c.codes) {
      codes.push_back(detail::constraint_to_json(constraint));
    }
    entry["codes"] = std::move(codes);
    conditions.push_back(std::move(entry));
  }
  root["conditions"] = std::move(conditions);
  return root.dump(2) + "\n";
}

DeyoMap parse_deyo_map(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw DataError(fmt::format("comorbidity map is not valid JSON: {}", e.what()));
  }
  if (!root.is_object() || !root.contains("conditions") ||
      !root.at("conditions").is_array()) {
    throw DataError("comorbidity map needs a 'conditions' array");
  }
  DeyoMap map;
  std::set<std::string> names;
  for (const json& entry : root.at("conditions")) {
    DeyoCondition c;
    c.name = entry.value("name", std::string());
    if (c.name.empty()) throw DataError("comorbidity map: condition with empty name");
    if (!names.insert(c.name).second) {
      throw DataError(fmt::format("comorbidity map: duplicate condition '{}'", c.name));
    }
    c.weight = entry.value("weight", 0);
    if (c.weight < 1) {
      throw DataError(fmt::format("comorbidity map: condition '{}' needs a positive weight",
                                  c.name));
    }
    if (!entry.contains("codes") || !entry.at("codes").is_array() ||
        entry.at("codes").empty()) {
      throw DataError(fmt::format("comorbidity map: condition '{}' has no codes", c.name));
    }
    for (const json& code : entry.at("codes")) {
      c.codes.push_back(detail::constraint_from_json(code, c.name));
    }
    map.conditions.push_back(std::move(c));
  }
  if (map.conditions.empty()) throw DataError("comorbidity map: no conditions");
  return map;
}

DeyoMap load_deyo_map(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(fmt::format("cannot open comorbidity map '{}'", path));
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_deyo_map(buffer.str());
}

const char* to_string(CciClass value) {
  switch (value) {
    case CciClass::Zero: return "0";
    case CciClass::One: return "1";
    case CciClass::Two: return "2";
    case CciClass::ThreePlus: return "3+";
  }
  return "?";
}

CciClass cci_class_of(int cci) {
  if (cci <= 0) return CciClass::Zero;
  if (cci == 1) return CciClass::One;
  if (cci == 2) return CciClass::Two;
  return CciClass::ThreePlus;
}

int charlson_admission_score(const FlowRecord& discharge, const DeyoMap& map) {
  int score = 0;
  for (const DeyoCondition& condition : map.conditions) {
    bool present = false;
    for (const CodeEntry& code : discharge.codes) {
      if (code.position < 1) continue;  // concomitant diagnoses only
      for (const CodeConstraint& constraint : condition.codes) {
        if (match_constraint(code, constraint)) {
          present = true;
          break;
        }
      }
      if (present) break;
    }
    if (present) score += condition.weight;
  }
  return score;
}

CharlsonResult charlson_score(const Subject& subject, const DeyoMap& map) {
  CharlsonResult result;
  for (const FlowRecord& r : subject.outcome_records) {
    if (r.flow != FlowKind::HospitalDischarge) continue;
    result.admission_scores.push_back(charlson_admission_score(r, map));
  }
  for (int s : result.admission_scores) result.cci = std::max(result.cci, s);
  result.cci_class = cci_class_of(result.cci);
  return result;
}

std::vector<CharlsonResult> charlson_scores(const Cohort& cohort, const DeyoMap& map) {
  std::vector<CharlsonResult> out;
  out.reserve(cohort.size());
  for (const Subject& s : cohort.subjects) out.push_back(charlson_score(s, map));
  return out;
}

}  // namespace frailty
