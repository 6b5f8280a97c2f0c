#include "frailty/markers.hpp"

#include <algorithm>
#include <cctype>
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

const char* to_string(MatchRule rule) {
  switch (rule) {
    case MatchRule::Exact: return "exact";
    case MatchRule::Prefix: return "prefix";
    case MatchRule::NumericRange: return "range";
    case MatchRule::AnyRecord: return "any_record";
  }
  return "?";
}

MatchRule match_rule_from_string(const std::string& name) {
  for (MatchRule rule : {MatchRule::Exact, MatchRule::Prefix, MatchRule::NumericRange,
                         MatchRule::AnyRecord}) {
    if (name == to_string(rule)) return rule;
  }
  throw DataError(fmt::format("unknown code match rule '{}'", name));
}

const char* to_string(CodePosition position) {
  switch (position) {
    case CodePosition::Any: return "any";
    case CodePosition::Primary: return "primary";
    case CodePosition::Secondary: return "secondary";
  }
  return "?";
}

CodePosition position_from_string(const std::string& name) {
  for (CodePosition p : {CodePosition::Any, CodePosition::Primary, CodePosition::Secondary}) {
    if (name == to_string(p)) return p;
  }
  throw DataError(fmt::format("unknown code position '{}'", name));
}

const char* to_string(MarkerKind kind) {
  switch (kind) {
    case MarkerKind::Dichotomous: return "dichotomous";
    case MarkerKind::OrdinalCount: return "count";
    case MarkerKind::OrdinalAge: return "age";
  }
  return "?";
}

MarkerKind marker_kind_from_string(const std::string& name) {
  for (MarkerKind k :
       {MarkerKind::Dichotomous, MarkerKind::OrdinalCount, MarkerKind::OrdinalAge}) {
    if (name == to_string(k)) return k;
  }
  throw DataError(fmt::format("unknown marker kind '{}'", name));
}

void note_non_numeric(MatchDiagnostics* diagnostics, const std::string& code) {
  if (!diagnostics) return;
  auto& list = diagnostics->non_numeric_codes;
  const auto it = std::lower_bound(list.begin(), list.end(), code);
  if (it == list.end() || *it != code) list.insert(it, code);
}

bool position_ok(const CodeEntry& code, CodePosition position) {
  switch (position) {
    case CodePosition::Any: return true;
    case CodePosition::Primary: return code.position == 0;
    case CodePosition::Secondary: return code.position >= 1;
  }
  return false;
}

template <typename Cut, typename Value>
std::uint8_t ordinal_from_cuts(Value value, const std::vector<Cut>& cuts) {
  std::size_t level = 0;
  for (Cut cut : cuts) {
    if (value >= static_cast<Value>(cut)) ++level;
  }
  return static_cast<std::uint8_t>(level);
}

}  // namespace

std::string normalize_code(std::string_view raw) {
  std::string out;
  out.reserve(raw.size());
  for (char c : raw) {
    if (c == '.' || c == ' ') continue;
    out.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  }
  return out;
}

bool match_constraint(const CodeEntry& code, const CodeConstraint& constraint,
                      MatchDiagnostics* diagnostics) {
  if (constraint.match == MatchRule::AnyRecord) return true;
  if (code.system != constraint.system) return false;
  if (!position_ok(code, constraint.position)) return false;
  const std::string norm = normalize_code(code.code);
  if (norm.empty()) return false;
  switch (constraint.match) {
    case MatchRule::Exact:
      return std::find(constraint.values.begin(), constraint.values.end(), norm) !=
             constraint.values.end();
    case MatchRule::Prefix:
      return std::any_of(constraint.values.begin(), constraint.values.end(),
                         [&](const std::string& v) { return norm.starts_with(v); });
    case MatchRule::NumericRange: {
      if (!norm.starts_with(constraint.range_alpha)) return false;
      const std::string_view digits =
          std::string_view(norm).substr(constraint.range_alpha.size());
      if (digits.size() < static_cast<std::size_t>(constraint.range_digits)) {
        note_non_numeric(diagnostics, norm);
        return false;
      }
      long value = 0;
      for (int i = 0; i < constraint.range_digits; ++i) {
        const char c = digits[static_cast<std::size_t>(i)];
        if (c < '0' || c > '9') {
          note_non_numeric(diagnostics, norm);
          return false;
        }
        value = value * 10 + (c - '0');
      }
      return value >= constraint.range_lo && value <= constraint.range_hi;
    }
    case MatchRule::AnyRecord: return true;  // handled above
  }
  return false;
}

bool match_record(const FlowRecord& record, const CodePattern& pattern,
                  MatchDiagnostics* diagnostics) {
  if (std::find(pattern.flows.begin(), pattern.flows.end(), record.flow) ==
      pattern.flows.end()) {
    return false;
  }
  bool code_found = pattern.code.match == MatchRule::AnyRecord;
  if (!code_found) {
    for (const CodeEntry& code : record.codes) {
      if (!match_constraint(code, pattern.code, diagnostics)) continue;
      // A veto applies to the specific code entry that matched; the record can
      // still qualify through one of its other codes.
      const bool vetoed =
          std::any_of(pattern.unless.begin(), pattern.unless.end(),
                      [&](const CodeConstraint& u) { return match_constraint(code, u); });
      if (!vetoed) {
        code_found = true;
        break;
      }
    }
  }
  if (!code_found) return false;
  // Joint requirements: each must be satisfied by some code of the same record.
  for (const CodeConstraint& requirement : pattern.also) {
    const bool satisfied = std::any_of(
        record.codes.begin(), record.codes.end(),
        [&](const CodeEntry& code) { return match_constraint(code, requirement, diagnostics); });
    if (!satisfied) return false;
  }
  return true;
}

std::size_t MarkerDefinition::level_count() const {
  switch (kind) {
    case MarkerKind::Dichotomous: return 2;
    case MarkerKind::OrdinalCount: return count_cuts.size() + 1;
    case MarkerKind::OrdinalAge: return age_cuts.size() + 1;
  }
  return 0;
}

std::vector<std::uint8_t> MarkerData::column(std::size_t marker) const {
  std::vector<std::uint8_t> out;
  out.reserve(profiles.size());
  for (const Profile& p : profiles) out.push_back(p[marker]);
  return out;
}

namespace {

std::uint8_t dichotomous_level(const Subject& subject, const MarkerDefinition& marker,
                               MatchDiagnostics* diagnostics) {
  for (const FlowRecord& record : subject.baseline_records) {
    for (const CodePattern& pattern : marker.patterns) {
      if (match_record(record, pattern, diagnostics)) return 1;
    }
  }
  return 0;
}

std::uint32_t count_level_raw(const Subject& subject, const MarkerDefinition& marker,
                              MatchDiagnostics* diagnostics) {
  std::uint32_t count = 0;
  for (const FlowRecord& record : subject.baseline_records) {
    if (record.flow != marker.count_flow) continue;
    if (marker.count_patterns.empty()) {
      ++count;
      continue;
    }
    for (const CodePattern& pattern : marker.count_patterns) {
      if (match_record(record, pattern, diagnostics)) {
        ++count;
        break;
      }
    }
  }
  return count;
}

}  // namespace

Profile extract_profile(const Subject& subject, const MarkerConfig& config,
                        MatchDiagnostics* diagnostics) {
  Profile profile;
  profile.reserve(config.markers.size());
  for (const MarkerDefinition& marker : config.markers) {
    std::uint8_t level = 0;
    switch (marker.kind) {
      case MarkerKind::Dichotomous:
        level = dichotomous_level(subject, marker, diagnostics);
        break;
      case MarkerKind::OrdinalCount:
        level = ordinal_from_cuts(count_level_raw(subject, marker, diagnostics),
                                  marker.count_cuts);
        break;
      case MarkerKind::OrdinalAge:
        level = ordinal_from_cuts(subject.age_years, marker.age_cuts);
        break;
    }
    profile.push_back(level);
  }
  return profile;
}

MarkerData extract_markers(const Cohort& cohort, const MarkerConfig& config) {
  MarkerData data;
  data.names.reserve(config.markers.size());
  data.level_counts.reserve(config.markers.size());
  for (std::size_t m = 0; m < config.markers.size(); ++m) {
    const MarkerDefinition& marker = config.markers[m];
    data.names.push_back(marker.name);
    data.level_counts.push_back(static_cast<std::uint8_t>(marker.level_count()));
    if (marker.kind == MarkerKind::OrdinalCount) data.count_marker_index.push_back(m);
  }
  data.raw_counts.assign(data.count_marker_index.size(),
                         std::vector<std::uint32_t>(cohort.subjects.size(), 0));
  data.profiles.reserve(cohort.subjects.size());
  for (std::size_t s = 0; s < cohort.subjects.size(); ++s) {
    const Subject& subject = cohort.subjects[s];
    Profile profile;
    profile.reserve(config.markers.size());
    std::size_t count_row = 0;
    for (const MarkerDefinition& marker : config.markers) {
      std::uint8_t level = 0;
      switch (marker.kind) {
        case MarkerKind::Dichotomous:
          level = dichotomous_level(subject, marker, &data.diagnostics);
          break;
        case MarkerKind::OrdinalCount: {
          const std::uint32_t count = count_level_raw(subject, marker, &data.diagnostics);
          data.raw_counts[count_row++][s] = count;
          level = ordinal_from_cuts(count, marker.count_cuts);
          break;
        }
        case MarkerKind::OrdinalAge:
          level = ordinal_from_cuts(subject.age_years, marker.age_cuts);
          break;
      }
      profile.push_back(level);
    }
    data.profiles.push_back(std::move(profile));
  }
  return data;
}

// ---------------------------------------------------------------------------
// Built-in marker definitions
// ---------------------------------------------------------------------------

namespace {

CodeConstraint exact(CodeSystem system, std::vector<std::string> values,
                     CodePosition position = CodePosition::Any) {
  CodeConstraint c;
  c.system = system;
  c.match = MatchRule::Exact;
  for (std::string& v : values) v = normalize_code(v);
  c.values = std::move(values);
  c.position = position;
  return c;
}

CodeConstraint prefix(CodeSystem system, std::vector<std::string> values,
                      CodePosition position = CodePosition::Any) {
  CodeConstraint c;
  c.system = system;
  c.match = MatchRule::Prefix;
  for (std::string& v : values) v = normalize_code(v);
  c.values = std::move(values);
  c.position = position;
  return c;
}

CodeConstraint range(CodeSystem system, long lo, long hi, std::string alpha = "",
                     int digits = 3, CodePosition position = CodePosition::Any) {
  CodeConstraint c;
  c.system = system;
  c.match = MatchRule::NumericRange;
  c.range_alpha = normalize_code(alpha);
  c.range_lo = lo;
  c.range_hi = hi;
  c.range_digits = digits;
  c.position = position;
  return c;
}

CodeConstraint any_record() {
  CodeConstraint c;
  c.match = MatchRule::AnyRecord;
  return c;
}

CodePattern pattern(std::vector<FlowKind> flows, CodeConstraint code,
                    std::vector<CodeConstraint> unless = {},
                    std::vector<CodeConstraint> also = {}) {
  CodePattern p;
  p.flows = std::move(flows);
  p.code = std::move(code);
  p.unless = std::move(unless);
  p.also = std::move(also);
  return p;
}

const std::vector<FlowKind> kDischargeAndEr = {FlowKind::HospitalDischarge,
                                               FlowKind::ERAdmission};

}  // namespace

MarkerConfig default_marker_config() {
  MarkerConfig config;

  {
    MarkerDefinition age;
    age.name = "age_class";
    age.kind = MarkerKind::OrdinalAge;
    age.age_cuts = {70, 75, 80, 85, 90};
    age.level_labels = {"65-69", "70-74", "75-79", "80-84", "85-89", "90+"};
    config.markers.push_back(std::move(age));
  }

  {
    MarkerDefinition hosp;
    hosp.name = "total_hospitalisations";
    hosp.kind = MarkerKind::OrdinalCount;
    hosp.count_flow = FlowKind::HospitalDischarge;
    hosp.count_cuts = {1, 3};
    hosp.level_labels = {"0", "1-2", "3+"};
    config.markers.push_back(std::move(hosp));
  }

  {
    MarkerDefinition mental;
    mental.name = "mental_disorders";
    mental.kind = MarkerKind::Dichotomous;
    mental.level_labels = {"absent", "present"};
    mental.patterns = {
        pattern({FlowKind::Exemption}, exact(CodeSystem::ExemptionCode, {"005", "014", "044"})),
        // Organic psychoses through neurotic/personality disorders, except the
        // dementia code 294.1 when recorded as a concomitant diagnosis.
        pattern(kDischargeAndEr, range(CodeSystem::Icd9Cm, 291, 319),
                {prefix(CodeSystem::Icd9Cm, {"2941"}, CodePosition::Secondary)}),
        pattern({FlowKind::Psychiatry}, prefix(CodeSystem::Icd10, {"F04"})),
        pattern({FlowKind::Psychiatry}, range(CodeSystem::Icd10, 6, 99, "F", 2)),
        pattern({FlowKind::Pharmaceutical}, prefix(CodeSystem::Atc, {"N05", "N06A", "N07B"})),
    };
    config.markers.push_back(std::move(mental));
  }

  {
    MarkerDefinition neuro;
    neuro.name = "neurological_diseases";
    neuro.kind = MarkerKind::Dichotomous;
    neuro.level_labels = {"absent", "present"};
    neuro.patterns = {
        pattern({FlowKind::Exemption},
                exact(CodeSystem::ExemptionCode, {"011", "017", "029", "034"})),
        // Exemption 038 only counts when the accompanying diagnosis is
        // parkinsonism (332), meningitis sequelae (041/046 families).
        pattern({FlowKind::Exemption}, exact(CodeSystem::ExemptionCode, {"038"}), {},
                {prefix(CodeSystem::Icd9Cm, {"332", "041", "046"})}),
        pattern(kDischargeAndEr, range(CodeSystem::Icd9Cm, 320, 359)),
        pattern(kDischargeAndEr, range(CodeSystem::Icd9Cm, 290, 290)),
        pattern(kDischargeAndEr, prefix(CodeSystem::Icd9Cm, {"2941"}, CodePosition::Secondary)),
        pattern({FlowKind::Psychiatry}, range(CodeSystem::Icd10, 0, 3, "F", 2)),
        pattern({FlowKind::Psychiatry}, prefix(CodeSystem::Icd10, {"F05"})),
        pattern({FlowKind::Pharmaceutical}, prefix(CodeSystem::Atc, {"N03", "N04", "N06D"})),
    };
    config.markers.push_back(std::move(neuro));
  }

  {
    MarkerDefinition cancer;
    cancer.name = "cancer";
    cancer.kind = MarkerKind::Dichotomous;
    cancer.level_labels = {"absent", "present"};
    cancer.patterns = {
        pattern({FlowKind::Exemption}, exact(CodeSystem::ExemptionCode, {"048"})),
        pattern(kDischargeAndEr, range(CodeSystem::Icd9Cm, 140, 208)),
        pattern(kDischargeAndEr,
                prefix(CodeSystem::Icd9Cm, {"V10", "V580", "V581", "V671", "V672"})),
        pattern({FlowKind::Pharmaceutical}, prefix(CodeSystem::Atc, {"L01"})),
    };
    config.markers.push_back(std::move(cancer));
  }

  {
    MarkerDefinition disability;
    disability.name = "disability";
    disability.kind = MarkerKind::Dichotomous;
    disability.level_labels = {"absent", "present"};
    disability.patterns = {
        pattern({FlowKind::Exemption},
                exact(CodeSystem::ExemptionCode,
                      {"3C1", "3C2", "3G1", "3G2", "3L1", "3L2", "3L3", "3M1", "3M2",
                       "3M3", "INAIL", "G01", "G02", "L01", "L02", "L03", "L04", "S01",
                       "S02", "S03", "C01", "C02", "C03", "C04"})),
        pattern({FlowKind::HomeCare}, any_record()),
    };
    config.markers.push_back(std::move(disability));
  }

  {
    MarkerDefinition heart;
    heart.name = "heart_failure";
    heart.kind = MarkerKind::Dichotomous;
    heart.level_labels = {"absent", "present"};
    heart.patterns = {
        pattern({FlowKind::Exemption}, exact(CodeSystem::ExemptionCode, {"021"})),
        pattern(kDischargeAndEr, range(CodeSystem::Icd9Cm, 428, 428)),
    };
    config.markers.push_back(std::move(heart));
  }

  {
    MarkerDefinition kidney;
    kidney.name = "kidney_failure";
    kidney.kind = MarkerKind::Dichotomous;
    kidney.level_labels = {"absent", "present"};
    kidney.patterns = {
        pattern({FlowKind::Exemption}, exact(CodeSystem::ExemptionCode, {"023"})),
        pattern(kDischargeAndEr, range(CodeSystem::Icd9Cm, 584, 586)),
    };
    config.markers.push_back(std::move(kidney));
  }

  return config;
}

// ---------------------------------------------------------------------------
// JSON configuration
// ---------------------------------------------------------------------------

namespace detail {

json constraint_to_json(const CodeConstraint& c) {
  json j;
  j["match"] = to_string(c.match);
  if (c.match == MatchRule::AnyRecord) return j;
  j["system"] = to_string(c.system);
  if (c.position != CodePosition::Any) j["position"] = to_string(c.position);
  if (c.match == MatchRule::NumericRange) {
    if (!c.range_alpha.empty()) j["alpha"] = c.range_alpha;
    j["lo"] = c.range_lo;
    j["hi"] = c.range_hi;
    j["digits"] = c.range_digits;
  } else {
    j["values"] = c.values;
  }
  return j;
}

CodeConstraint constraint_from_json(const json& j, const std::string& where) {
  CodeConstraint c;
  if (!j.is_object()) throw DataError(fmt::format("{}: code constraint must be an object", where));
  c.match = match_rule_from_string(j.value("match", "exact"));
  if (c.match == MatchRule::AnyRecord) return c;
  if (!j.contains("system")) {
    throw DataError(fmt::format("{}: code constraint is missing 'system'", where));
  }
  c.system = code_system_from_string(j.at("system").get<std::string>());
  if (j.contains("position")) {
    c.position = position_from_string(j.at("position").get<std::string>());
  }
  if (c.match == MatchRule::NumericRange) {
    c.range_alpha = normalize_code(j.value("alpha", ""));
    if (!j.contains("lo") || !j.contains("hi")) {
      throw DataError(fmt::format("{}: range constraint needs 'lo' and 'hi'", where));
    }
    c.range_lo = j.at("lo").get<long>();
    c.range_hi = j.at("hi").get<long>();
    c.range_digits = j.value("digits", 3);
    if (c.range_lo > c.range_hi) {
      throw DataError(fmt::format("{}: range lo {} exceeds hi {}", where, c.range_lo, c.range_hi));
    }
    if (c.range_digits < 1 || c.range_digits > 9) {
      throw DataError(fmt::format("{}: range digits must be in [1, 9]", where));
    }
  } else {
    if (!j.contains("values") || !j.at("values").is_array() || j.at("values").empty()) {
      throw DataError(fmt::format("{}: '{}' constraint needs a non-empty 'values' array", where,
                                  to_string(c.match)));
    }
    for (const json& v : j.at("values")) {
      const std::string norm = normalize_code(v.get<std::string>());
      if (norm.empty()) {
        throw DataError(fmt::format("{}: empty code value after normalisation", where));
      }
      c.values.push_back(norm);
    }
  }
  return c;
}

json pattern_to_json(const CodePattern& p) {
  json j;
  json flows = json::array();
  for (FlowKind f : p.flows) flows.push_back(to_string(f));
  j["flows"] = std::move(flows);
  j["code"] = constraint_to_json(p.code);
  if (!p.unless.empty()) {
    json arr = json::array();
    for (const CodeConstraint& c : p.unless) arr.push_back(constraint_to_json(c));
    j["unless"] = std::move(arr);
  }
  if (!p.also.empty()) {
    json arr = json::array();
    for (const CodeConstraint& c : p.also) arr.push_back(constraint_to_json(c));
    j["also"] = std::move(arr);
  }
  return j;
}

CodePattern pattern_from_json(const json& j, const std::string& where) {
  CodePattern p;
  if (!j.is_object()) throw DataError(fmt::format("{}: pattern must be an object", where));
  if (!j.contains("flows") || !j.at("flows").is_array() || j.at("flows").empty()) {
    throw DataError(fmt::format("{}: pattern needs a non-empty 'flows' array", where));
  }
  for (const json& f : j.at("flows")) {
    p.flows.push_back(flow_kind_from_string(f.get<std::string>()));
  }
  if (!j.contains("code")) {
    throw DataError(fmt::format("{}: pattern is missing 'code'", where));
  }
  p.code = constraint_from_json(j.at("code"), where);
  if (j.contains("unless")) {
    for (const json& u : j.at("unless")) p.unless.push_back(constraint_from_json(u, where));
  }
  if (j.contains("also")) {
    for (const json& a : j.at("also")) p.also.push_back(constraint_from_json(a, where));
  }
  return p;
}

}  // namespace detail

namespace {

using detail::constraint_from_json;
using detail::constraint_to_json;
using detail::pattern_from_json;
using detail::pattern_to_json;

template <typename T>
void require_strictly_increasing(const std::vector<T>& cuts, const std::string& where) {
  for (std::size_t i = 1; i < cuts.size(); ++i) {
    if (cuts[i] <= cuts[i - 1]) {
      throw DataError(fmt::format("{}: cut points must be strictly increasing", where));
    }
  }
}

json marker_to_json(const MarkerDefinition& m) {
  json j;
  j["name"] = m.name;
  j["kind"] = to_string(m.kind);
  if (!m.level_labels.empty()) j["labels"] = m.level_labels;
  switch (m.kind) {
    case MarkerKind::Dichotomous: {
      json arr = json::array();
      for (const CodePattern& p : m.patterns) arr.push_back(pattern_to_json(p));
      j["patterns"] = std::move(arr);
      break;
    }
    case MarkerKind::OrdinalCount: {
      j["flow"] = to_string(m.count_flow);
      j["cuts"] = m.count_cuts;
      if (!m.count_patterns.empty()) {
        json arr = json::array();
        for (const CodePattern& p : m.count_patterns) arr.push_back(pattern_to_json(p));
        j["patterns"] = std::move(arr);
      }
      break;
    }
    case MarkerKind::OrdinalAge:
      j["cuts"] = m.age_cuts;
      break;
  }
  return j;
}

MarkerDefinition marker_from_json(const json& j) {
  MarkerDefinition m;
  if (!j.is_object()) throw DataError("marker entry must be an object");
  if (!j.contains("name") || !j.at("name").is_string()) {
    throw DataError("marker entry is missing 'name'");
  }
  m.name = j.at("name").get<std::string>();
  const std::string where = fmt::format("marker '{}'", m.name);
  if (m.name.empty()) throw DataError("marker name must be non-empty");
  if (!j.contains("kind")) throw DataError(fmt::format("{}: missing 'kind'", where));
  m.kind = marker_kind_from_string(j.at("kind").get<std::string>());
  if (j.contains("labels")) {
    m.level_labels = j.at("labels").get<std::vector<std::string>>();
  }
  switch (m.kind) {
    case MarkerKind::Dichotomous: {
      if (!j.contains("patterns") || !j.at("patterns").is_array() || j.at("patterns").empty()) {
        throw DataError(fmt::format("{}: dichotomous marker needs a non-empty 'patterns' array",
                                    where));
      }
      for (const json& p : j.at("patterns")) m.patterns.push_back(pattern_from_json(p, where));
      break;
    }
    case MarkerKind::OrdinalCount: {
      if (j.contains("flow")) {
        m.count_flow = flow_kind_from_string(j.at("flow").get<std::string>());
      }
      if (!j.contains("cuts") || !j.at("cuts").is_array() || j.at("cuts").empty()) {
        throw DataError(fmt::format("{}: count marker needs a non-empty 'cuts' array", where));
      }
      m.count_cuts = j.at("cuts").get<std::vector<std::uint32_t>>();
      require_strictly_increasing(m.count_cuts, where);
      if (m.count_cuts.front() < 1) {
        throw DataError(fmt::format("{}: count cuts must be positive", where));
      }
      if (j.contains("patterns")) {
        for (const json& p : j.at("patterns")) {
          m.count_patterns.push_back(pattern_from_json(p, where));
        }
      }
      break;
    }
    case MarkerKind::OrdinalAge: {
      if (!j.contains("cuts") || !j.at("cuts").is_array() || j.at("cuts").empty()) {
        throw DataError(fmt::format("{}: age marker needs a non-empty 'cuts' array", where));
      }
      m.age_cuts = j.at("cuts").get<std::vector<int>>();
      require_strictly_increasing(m.age_cuts, where);
      break;
    }
  }
  if (!m.level_labels.empty() && m.level_labels.size() != m.level_count()) {
    throw DataError(fmt::format("{}: {} labels given but the marker has {} levels", where,
                                m.level_labels.size(), m.level_count()));
  }
  return m;
}

}  // namespace

MarkerConfig parse_marker_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw DataError(fmt::format("marker configuration is not valid JSON: {}", e.what()));
  }
  if (!root.is_object() || !root.contains("markers") || !root.at("markers").is_array()) {
    throw DataError("marker configuration must be an object with a 'markers' array");
  }
  MarkerConfig config;
  std::set<std::string> names;
  for (const json& entry : root.at("markers")) {
    if (entry.is_object() && entry.value("draft", false)) {
      ++config.skipped_drafts;
      continue;
    }
    MarkerDefinition marker = marker_from_json(entry);
    if (!names.insert(marker.name).second) {
      throw DataError(fmt::format("duplicate marker name '{}'", marker.name));
    }
    config.markers.push_back(std::move(marker));
  }
  if (config.markers.empty()) {
    throw DataError("marker configuration defines no active markers");
  }
  return config;
}

MarkerConfig load_marker_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(fmt::format("cannot open marker configuration '{}'", path));
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_marker_config(buffer.str());
}

std::string marker_config_to_json(const MarkerConfig& config) {
  json root;
  json markers = json::array();
  for (const MarkerDefinition& m : config.markers) markers.push_back(marker_to_json(m));
  root["markers"] = std::move(markers);
  return root.dump(2) + "\n";
}

}  // namespace frailty
