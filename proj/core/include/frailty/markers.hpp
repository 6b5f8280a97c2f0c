#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "frailty/cohort.hpp"
#include "frailty/poset.hpp"

namespace frailty {

enum class MatchRule {
  Exact,         // normalized code equals one of the values
  Prefix,        // normalized code starts with one of the values
  NumericRange,  // leading digits (after an optional letter prefix) in [lo, hi]
  AnyRecord,     // matches the record's existence; codes are not consulted
};

enum class CodePosition { Any, Primary, Secondary };

// Test applied to a single code entry of a record.
struct CodeConstraint {
  CodeSystem system = CodeSystem::Icd9Cm;
  MatchRule match = MatchRule::Exact;
  std::vector<std::string> values;  // Exact / Prefix alternatives (normalized at load)
  std::string range_alpha;          // NumericRange: required leading letters ("" = none)
  long range_lo = 0;
  long range_hi = 0;
  int range_digits = 3;             // digits compared after the letter prefix
  CodePosition position = CodePosition::Any;
};

// Record-level pattern. A record matches when its flow is listed, some code
// satisfies `code` without also satisfying any `unless` constraint, and each
// `also` constraint is satisfied by some code of the same record (used for
// joint requirements such as an exemption plus a specific diagnosis).
struct CodePattern {
  std::vector<FlowKind> flows;
  CodeConstraint code;
  std::vector<CodeConstraint> unless;
  std::vector<CodeConstraint> also;
};

enum class MarkerKind {
  Dichotomous,   // 1 when any baseline record matches any pattern
  OrdinalCount,  // category of a record count
  OrdinalAge,    // category of age_years
};

struct MarkerDefinition {
  std::string name;
  MarkerKind kind = MarkerKind::Dichotomous;
  std::vector<std::string> level_labels;      // optional; generated when empty
  std::vector<CodePattern> patterns;          // Dichotomous
  FlowKind count_flow = FlowKind::HospitalDischarge;  // OrdinalCount
  std::vector<CodePattern> count_patterns;    // empty = count every record of count_flow
  std::vector<std::uint32_t> count_cuts;      // ascending; level = number of cuts <= count
  std::vector<int> age_cuts;                  // ascending; level = number of cuts <= age

  std::size_t level_count() const;
};

struct MarkerConfig {
  std::vector<MarkerDefinition> markers;
  // Draft entries (no code list yet) are counted and skipped at load so a
  // partially filled catalog still works.
  std::size_t skipped_drafts = 0;
};

// Codes under a NumericRange rule that had no usable digit prefix; collected
// once per distinct code.
struct MatchDiagnostics {
  std::vector<std::string> non_numeric_codes;
};

// Uppercases and strips dots and spaces: "294.1" -> "2941".
std::string normalize_code(std::string_view raw);

bool match_constraint(const CodeEntry& code, const CodeConstraint& constraint,
                      MatchDiagnostics* diagnostics = nullptr);
bool match_record(const FlowRecord& record, const CodePattern& pattern,
                  MatchDiagnostics* diagnostics = nullptr);

// Marker values for a whole cohort, aligned with cohort.subjects.
struct MarkerData {
  std::vector<std::string> names;
  std::vector<std::uint8_t> level_counts;
  std::vector<Profile> profiles;  // one per subject, values in schema order
  // Raw record counts for each OrdinalCount marker, one row per such marker.
  std::vector<std::size_t> count_marker_index;          // row -> marker index
  std::vector<std::vector<std::uint32_t>> raw_counts;   // [row][subject]
  MatchDiagnostics diagnostics;

  // Level column of one marker (used by the screening stage).
  std::vector<std::uint8_t> column(std::size_t marker) const;
};

Profile extract_profile(const Subject& subject, const MarkerConfig& config,
                        MatchDiagnostics* diagnostics = nullptr);
MarkerData extract_markers(const Cohort& cohort, const MarkerConfig& config);

// The shipped eight-variable configuration (age bands, hospitalisation
// counts, and the six dichotomous clinical markers with their code lists).
MarkerConfig default_marker_config();

// Load and validate a marker catalog from JSON; throws DataError with a
// message naming the offending entry.
MarkerConfig load_marker_config(const std::string& path);
MarkerConfig parse_marker_config(const std::string& json_text);

// Canonical JSON rendering (used for artifact export and config checks).
std::string marker_config_to_json(const MarkerConfig& config);

}  // namespace frailty
