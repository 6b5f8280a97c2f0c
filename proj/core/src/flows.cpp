#include "frailty/flows.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "frailty/csv.hpp"
#include "frailty/errors.hpp"
#include "marker_json.hpp"

namespace frailty {

namespace {

using nlohmann::json;

struct ColumnSpec {
  std::string name;
  enum Kind { Code, Attribute } kind = Code;
  CodeSystem system = CodeSystem::Icd9Cm;
  bool required = false;  // empty value makes the row malformed
};

struct FlowSchema {
  FlowKind flow;
  const std::string* path;
  std::vector<ColumnSpec> columns;  // after subject_id,date; codes get positions 0,1,...
};

std::vector<FlowSchema> flow_schemas(const FlowPaths& paths) {
  auto dx = [](const std::string& name, CodeSystem system) {
    return ColumnSpec{name, ColumnSpec::Code, system, false};
  };
  auto code = [](const std::string& name, CodeSystem system) {
    return ColumnSpec{name, ColumnSpec::Code, system, true};
  };
  auto attr = [](const std::string& name) {
    return ColumnSpec{name, ColumnSpec::Attribute, CodeSystem::Icd9Cm, false};
  };
  std::vector<FlowSchema> schemas;
  schemas.push_back({FlowKind::HospitalDischarge, &paths.discharge,
                     {attr("duration"), dx("dx1", CodeSystem::Icd9Cm),
                      dx("dx2", CodeSystem::Icd9Cm), dx("dx3", CodeSystem::Icd9Cm),
                      dx("dx4", CodeSystem::Icd9Cm), dx("dx5", CodeSystem::Icd9Cm),
                      dx("dx6", CodeSystem::Icd9Cm)}});
  schemas.push_back({FlowKind::ERAdmission, &paths.er,
                     {attr("priority"), dx("dx1", CodeSystem::Icd9Cm),
                      dx("dx2", CodeSystem::Icd9Cm), dx("dx3", CodeSystem::Icd9Cm),
                      dx("dx4", CodeSystem::Icd9Cm), dx("dx5", CodeSystem::Icd9Cm)}});
  schemas.push_back({FlowKind::Psychiatry, &paths.psychiatry,
                     {dx("dx1", CodeSystem::Icd10), dx("dx2", CodeSystem::Icd10),
                      dx("dx3", CodeSystem::Icd10)}});
  schemas.push_back({FlowKind::HomeCare, &paths.home_care,
                     {dx("service_code", CodeSystem::ServiceCode)}});
  schemas.push_back({FlowKind::Exemption, &paths.exemption,
                     {code("exemption_code", CodeSystem::ExemptionCode),
                      dx("diagnosis", CodeSystem::Icd9Cm)}});
  schemas.push_back({FlowKind::Pharmaceutical, &paths.pharma,
                     {code("atc", CodeSystem::Atc)}});
  schemas.push_back({FlowKind::Outpatient, &paths.outpatient,
                     {code("service_code", CodeSystem::ServiceCode)}});
  return schemas;
}

[[noreturn]] void rethrow_row(const std::string& path, std::size_t line,
                              const std::string& message) {
  throw DataError(fmt::format("{}:{}: {}", path, line, message));
}

std::int32_t parse_int32(const std::string& text, const char* what) {
  try {
    std::size_t used = 0;
    const int value = std::stoi(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return value;
  } catch (const std::exception&) {
    throw DataError(fmt::format("bad {} '{}'", what, text));
  }
}

class RowErrors {
 public:
  RowErrors(RowPolicy policy, IngestStats* stats) : policy_(policy), stats_(stats) {}

  void report(const std::string& path, std::size_t line, const std::string& message) {
    if (policy_ == RowPolicy::Abort) rethrow_row(path, line, message);
    if (stats_) {
      ++stats_->malformed_rows;
      if (stats_->row_errors.size() < kMaxLogged) {
        stats_->row_errors.push_back(fmt::format("{}:{}: {}", path, line, message));
      }
    }
  }

 private:
  static constexpr std::size_t kMaxLogged = 200;
  RowPolicy policy_;
  IngestStats* stats_;
};

}  // namespace

Cohort load_flows(const FlowPaths& paths, const CohortSpec& spec, RowPolicy policy,
                  IngestStats* stats) {
  spec.validate();
  if (paths.registry.empty()) throw DataError("load_flows: registry path is required");

  Cohort cohort;
  cohort.spec = spec;
  RowErrors errors(policy, stats);
  const Date index_date = Date::first_of_year(spec.outcome_year);

  // Registry pass: one subject per row that satisfies age and survival at the
  // index date. Ineligible rows are remembered so their clinical records can
  // be told apart from true orphans.
  std::map<SubjectId, std::size_t> by_id;
  constexpr std::size_t kExcluded = static_cast<std::size_t>(-1);
  {
    CsvReader reader(paths.registry);
    const int c_id = reader.require_column("subject_id");
    const int c_sex = reader.require_column("sex");
    const int c_birth = reader.require_column("birth_date");
    const int c_death = reader.require_column("death_date");
    const int c_area = reader.require_column("area_id");
    std::vector<std::string> fields;
    while (reader.next(fields)) {
      if (stats) ++stats->registry_rows;
      try {
        if (fields.size() != reader.header().size()) {
          throw DataError(fmt::format("expected {} fields, found {}",
                                      reader.header().size(), fields.size()));
        }
        Subject subject;
        subject.id = fields[c_id];
        if (subject.id.empty()) throw DataError("empty subject_id");
        if (by_id.contains(subject.id)) {
          throw DataError(fmt::format("duplicate subject_id '{}'", subject.id));
        }
        subject.sex = sex_from_string(fields[c_sex]);
        const Date birth = Date::parse(fields[c_birth]);
        subject.age_years = age_in_years(birth, index_date);
        if (!fields[c_death].empty()) subject.death_date = Date::parse(fields[c_death]);
        if (!fields[c_area].empty()) {
          subject.area_id = parse_int32(fields[c_area], "area_id");
        }

        if (subject.age_years < spec.min_age) {
          if (stats) ++stats->under_age;
          by_id.emplace(subject.id, kExcluded);
          continue;
        }
        if (subject.death_date && *subject.death_date < index_date) {
          if (stats) ++stats->dead_before_index;
          by_id.emplace(subject.id, kExcluded);
          continue;
        }
        by_id.emplace(subject.id, 0);  // index assigned after sorting
        cohort.subjects.push_back(std::move(subject));
      } catch (const DataError& e) {
        errors.report(paths.registry, reader.line_number(), e.what());
      }
    }
  }
  std::sort(cohort.subjects.begin(), cohort.subjects.end(),
            [](const Subject& a, const Subject& b) { return a.id < b.id; });
  for (std::size_t i = 0; i < cohort.subjects.size(); ++i) {
    by_id[cohort.subjects[i].id] = i;
  }
  if (stats) stats->subjects = cohort.subjects.size();

  for (const FlowSchema& schema : flow_schemas(paths)) {
    if (schema.path->empty()) continue;
    CsvReader reader(*schema.path);
    const int c_id = reader.require_column("subject_id");
    const int c_date = reader.require_column("date");
    std::vector<int> cols;
    cols.reserve(schema.columns.size());
    for (const ColumnSpec& c : schema.columns) cols.push_back(reader.require_column(c.name));
    std::vector<std::string> fields;
    while (reader.next(fields)) {
      if (stats) ++stats->clinical_rows;
      try {
        if (fields.size() != reader.header().size()) {
          throw DataError(fmt::format("expected {} fields, found {}",
                                      reader.header().size(), fields.size()));
        }
        const std::string& id = fields[c_id];
        if (id.empty()) throw DataError("empty subject_id");
        FlowRecord record;
        record.flow = schema.flow;
        record.date = Date::parse(fields[c_date]);
        int position = 0;
        for (std::size_t k = 0; k < schema.columns.size(); ++k) {
          const ColumnSpec& col = schema.columns[k];
          const std::string& value = fields[cols[k]];
          if (col.kind == ColumnSpec::Attribute) {
            if (!value.empty()) record.attributes.push_back({col.name, value});
            continue;
          }
          if (value.empty()) {
            if (col.required) throw DataError(fmt::format("empty {}", col.name));
            ++position;  // keep later dx slots at their declared positions
            continue;
          }
          record.codes.push_back({col.system, value, position});
          ++position;
        }

        const auto it = by_id.find(id);
        if (it == by_id.end()) {
          if (stats) ++stats->orphan_records;
          continue;
        }
        if (it->second == kExcluded) continue;  // ineligible but known subject
        Subject& subject = cohort.subjects[it->second];
        if (record.date >= spec.baseline_start && record.date <= spec.baseline_end) {
          subject.baseline_records.push_back(std::move(record));
          if (stats) ++stats->baseline_records;
        } else if (record.date.year == spec.outcome_year) {
          subject.outcome_records.push_back(std::move(record));
          if (stats) ++stats->outcome_records;
        } else {
          if (stats) ++stats->outside_window;
        }
      } catch (const DataError& e) {
        errors.report(*schema.path, reader.line_number(), e.what());
      }
    }
  }
  return cohort;
}

namespace {

class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header) : path_(path) {
    if (path.empty()) throw DataError("write_flows: every flow needs a path");
    out_.open(path, std::ios::binary | std::ios::trunc);
    if (!out_) throw DataError(fmt::format("cannot open '{}' for writing", path));
    row(header);
  }

  void row(const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) out_ << ',';
      out_ << csv_escape(fields[i]);
    }
    out_ << '\n';
  }

  void close() {
    out_.flush();
    if (!out_) throw DataError(fmt::format("write to '{}' failed", path_));
    out_.close();
  }

 private:
  std::string path_;
  std::ofstream out_;
};

}  // namespace

void write_flows(const Cohort& cohort, const FlowPaths& paths) {
  CsvWriter registry(paths.registry,
                     {"subject_id", "sex", "birth_date", "death_date", "area_id"});
  const Date index_date = Date::first_of_year(cohort.spec.outcome_year);
  for (const Subject& s : cohort.subjects) {
    // Reconstruct a birth date consistent with the stored age: July 1 keeps
    // the completed-years computation exact in both directions.
    const Date birth{index_date.year - s.age_years - 1, 7, 1};
    registry.row({s.id, to_string(s.sex), birth.to_string(),
                  s.death_date ? s.death_date->to_string() : "",
                  s.area_id ? std::to_string(*s.area_id) : ""});
  }
  registry.close();

  std::map<FlowKind, CsvWriter> writers;
  const FlowPaths& p = paths;
  auto open = [&](FlowKind flow, const std::string& path, std::vector<std::string> cols) {
    cols.insert(cols.begin(), {"subject_id", "date"});
    writers.emplace(flow, CsvWriter(path, cols));
  };
  open(FlowKind::HospitalDischarge, p.discharge,
       {"duration", "dx1", "dx2", "dx3", "dx4", "dx5", "dx6"});
  open(FlowKind::ERAdmission, p.er, {"priority", "dx1", "dx2", "dx3", "dx4", "dx5"});
  open(FlowKind::Psychiatry, p.psychiatry, {"dx1", "dx2", "dx3"});
  open(FlowKind::HomeCare, p.home_care, {"service_code"});
  open(FlowKind::Exemption, p.exemption, {"exemption_code", "diagnosis"});
  open(FlowKind::Pharmaceutical, p.pharma, {"atc"});
  open(FlowKind::Outpatient, p.outpatient, {"service_code"});

  auto write_record = [&](const SubjectId& id, const FlowRecord& r) {
    const int dx_slots = max_diagnoses(r.flow);
    const bool has_attr =
        r.flow == FlowKind::HospitalDischarge || r.flow == FlowKind::ERAdmission;
    std::vector<std::string> fields{id, r.date.to_string()};
    if (has_attr) {
      const std::string* attr =
          r.attribute(r.flow == FlowKind::HospitalDischarge ? "duration" : "priority");
      fields.push_back(attr ? *attr : "");
    }
    std::vector<std::string> dx(static_cast<std::size_t>(dx_slots));
    for (const CodeEntry& c : r.codes) {
      if (c.position < 0 || c.position >= dx_slots) {
        throw DataError(fmt::format("record of subject '{}' has code position {} "
                                    "outside the {} slots of its flow",
                                    id, c.position, dx_slots));
      }
      dx[static_cast<std::size_t>(c.position)] = c.code;
    }
    fields.insert(fields.end(), dx.begin(), dx.end());
    writers.at(r.flow).row(fields);
  };

  for (const Subject& s : cohort.subjects) {
    for (const FlowRecord& r : s.baseline_records) write_record(s.id, r);
    for (const FlowRecord& r : s.outcome_records) write_record(s.id, r);
  }
  for (auto& [flow, writer] : writers) writer.close();
}

// ---------------------------------------------------------------------------
// Outcome linkage
// ---------------------------------------------------------------------------

OutcomeConfig default_outcome_config() {
  OutcomeConfig config;

  {
    CodePattern femur;
    femur.flows = {FlowKind::HospitalDischarge};
    femur.code.system = CodeSystem::Icd9Cm;
    femur.code.match = MatchRule::NumericRange;
    femur.code.range_lo = 820;
    femur.code.range_hi = 821;
    config.femur_fracture.push_back(std::move(femur));
  }

  // The disability outcome reuses the disability marker's code lists, so the
  // baseline flag and the marker always agree.
  const MarkerConfig markers = default_marker_config();
  for (const MarkerDefinition& m : markers.markers) {
    if (m.name == "disability") config.disability = m.patterns;
  }
  if (config.disability.empty()) {
    throw DataError("default marker catalog lacks the disability marker");
  }

  {
    CodePattern dx;
    dx.flows = {FlowKind::HospitalDischarge, FlowKind::ERAdmission};
    dx.code.system = CodeSystem::Icd9Cm;
    dx.code.match = MatchRule::NumericRange;
    dx.code.range_lo = 290;
    dx.code.range_hi = 290;
    config.dementia.push_back(dx);

    CodePattern secondary;
    secondary.flows = {FlowKind::HospitalDischarge, FlowKind::ERAdmission};
    secondary.code.system = CodeSystem::Icd9Cm;
    secondary.code.match = MatchRule::Prefix;
    secondary.code.values = {"2941"};
    config.dementia.push_back(secondary);

    CodePattern psy;
    psy.flows = {FlowKind::Psychiatry};
    psy.code.system = CodeSystem::Icd10;
    psy.code.match = MatchRule::NumericRange;
    psy.code.range_alpha = "F";
    psy.code.range_lo = 0;
    psy.code.range_hi = 3;
    psy.code.range_digits = 2;
    config.dementia.push_back(psy);

    CodePattern drugs;
    drugs.flows = {FlowKind::Pharmaceutical};
    drugs.code.system = CodeSystem::Atc;
    drugs.code.match = MatchRule::Prefix;
    drugs.code.values = {"N06D"};
    config.dementia.push_back(drugs);
  }

  return config;
}

namespace {

json patterns_to_json(const std::vector<CodePattern>& patterns) {
  json arr = json::array();
  for (const CodePattern& p : patterns) arr.push_back(detail::pattern_to_json(p));
  return arr;
}

std::vector<CodePattern> patterns_from_json(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) {
    throw DataError(fmt::format("outcome configuration: '{}' needs a non-empty array",
                                where));
  }
  std::vector<CodePattern> out;
  for (const json& p : j) out.push_back(detail::pattern_from_json(p, where));
  return out;
}

}  // namespace

std::string outcome_config_to_json(const OutcomeConfig& config) {
  json root;
  root["femur_fracture"] = patterns_to_json(config.femur_fracture);
  root["disability"] = patterns_to_json(config.disability);
  root["dementia"] = patterns_to_json(config.dementia);
  root["er_priority_key"] = config.er_priority_key;
  root["er_priority_value"] = config.er_priority_value;
  return root.dump(2) + "\n";
}

OutcomeConfig parse_outcome_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw DataError(fmt::format("outcome configuration is not valid JSON: {}", e.what()));
  }
  if (!root.is_object()) throw DataError("outcome configuration must be a JSON object");
  OutcomeConfig config;
  for (const char* key : {"femur_fracture", "disability", "dementia"}) {
    if (!root.contains(key)) {
      throw DataError(fmt::format("outcome configuration is missing '{}'", key));
    }
  }
  config.femur_fracture = patterns_from_json(root.at("femur_fracture"), "femur_fracture");
  config.disability = patterns_from_json(root.at("disability"), "disability");
  config.dementia = patterns_from_json(root.at("dementia"), "dementia");
  config.er_priority_key = root.value("er_priority_key", std::string("priority"));
  config.er_priority_value = root.value("er_priority_value", std::string("red"));
  if (config.er_priority_key.empty() || config.er_priority_value.empty()) {
    throw DataError("outcome configuration: triage key and value must be non-empty");
  }
  return config;
}

OutcomeConfig load_outcome_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(fmt::format("cannot open outcome configuration '{}'", path));
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_outcome_config(buffer.str());
}

namespace {

bool any_pattern_match(const std::vector<FlowRecord>& records,
                       const std::vector<CodePattern>& patterns) {
  for (const FlowRecord& r : records) {
    for (const CodePattern& p : patterns) {
      if (match_record(r, p)) return true;
    }
  }
  return false;
}

}  // namespace

void link_outcomes(Cohort& cohort, const OutcomeConfig& config) {
  const int outcome_year = cohort.spec.outcome_year;
  for (Subject& s : cohort.subjects) {
    if (s.death_date && *s.death_date <= cohort.spec.baseline_end) {
      throw DataError(fmt::format(
          "subject '{}' died on {}, on or before the baseline end {}", s.id,
          s.death_date->to_string(), cohort.spec.baseline_end.to_string()));
    }
    OutcomeVector v;
    v.baseline_disability = any_pattern_match(s.baseline_records, config.disability);
    v.baseline_dementia = any_pattern_match(s.baseline_records, config.dementia);
    v.death = s.death_date && s.death_date->year == outcome_year;
    v.femur_fracture = any_pattern_match(s.outcome_records, config.femur_fracture);
    v.disability_onset =
        !v.baseline_disability && any_pattern_match(s.outcome_records, config.disability);
    v.dementia_onset =
        !v.baseline_dementia && any_pattern_match(s.outcome_records, config.dementia);
    for (const FlowRecord& r : s.outcome_records) {
      if (r.flow == FlowKind::HospitalDischarge) v.hospitalisation = true;
      if (r.flow == FlowKind::ERAdmission) {
        const std::string* priority = r.attribute(config.er_priority_key);
        if (priority && *priority == config.er_priority_value) v.er_red_code = true;
      }
    }
    s.outcomes = v;
  }
}

}  // namespace frailty
