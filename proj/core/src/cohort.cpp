#include "frailty/cohort.hpp"

#include "frailty/errors.hpp"

#include <fmt/format.h>
#include <json.hpp>

#include <fstream>
#include <unordered_set>

namespace frailty {

using nlohmann::json;

const char* to_string(FlowKind flow) {
    switch (flow) {
    case FlowKind::HealthRegistry: return "health_registry";
    case FlowKind::HospitalDischarge: return "hospital_discharge";
    case FlowKind::ERAdmission: return "er_admission";
    case FlowKind::Psychiatry: return "psychiatry";
    case FlowKind::HomeCare: return "home_care";
    case FlowKind::Exemption: return "exemption";
    case FlowKind::Pharmaceutical: return "pharmaceutical";
    case FlowKind::Outpatient: return "outpatient";
    }
    return "?";
}

const char* to_string(CodeSystem system) {
    switch (system) {
    case CodeSystem::Icd9Cm: return "icd9cm";
    case CodeSystem::Atc: return "atc";
    case CodeSystem::ExemptionCode: return "exemption";
    case CodeSystem::ServiceCode: return "service";
    case CodeSystem::Icd10: return "icd10";
    }
    return "?";
}

const char* to_string(Sex sex) { return sex == Sex::Male ? "M" : "F"; }

FlowKind flow_kind_from_string(const std::string& name) {
    for (int i = 0; i < kFlowKindCount; ++i) {
        auto flow = static_cast<FlowKind>(i);
        if (name == to_string(flow)) return flow;
    }
    throw DataError(fmt::format("unknown flow kind '{}'", name));
}

CodeSystem code_system_from_string(const std::string& name) {
    for (int i = 0; i < kCodeSystemCount; ++i) {
        auto system = static_cast<CodeSystem>(i);
        if (name == to_string(system)) return system;
    }
    throw DataError(fmt::format("unknown code system '{}'", name));
}

Sex sex_from_string(const std::string& name) {
    if (name == "M" || name == "m" || name == "1") return Sex::Male;
    if (name == "F" || name == "f" || name == "2") return Sex::Female;
    throw DataError(fmt::format("unknown sex '{}'", name));
}

const std::string* FlowRecord::attribute(const std::string& key) const {
    for (const auto& a : attributes)
        if (a.key == key) return &a.value;
    return nullptr;
}

int max_diagnoses(FlowKind flow) {
    switch (flow) {
    case FlowKind::HospitalDischarge: return 6; // primary + 5 concomitant
    case FlowKind::ERAdmission: return 5;       // primary + 4 concomitant
    case FlowKind::Psychiatry: return 3;        // primary + 2 concomitant
    case FlowKind::Exemption: return 2;         // exemption code + diagnosis
    default: return 1;
    }
}

const char* to_string(Outcome outcome) {
    switch (outcome) {
    case Outcome::Death: return "death";
    case Outcome::ErRedCode: return "er_red_code";
    case Outcome::Hospitalisation: return "hospitalisation";
    case Outcome::DisabilityOnset: return "disability_onset";
    case Outcome::DementiaOnset: return "dementia_onset";
    case Outcome::FemurFracture: return "femur_fracture";
    }
    return "?";
}

bool outcome_flag(const OutcomeVector& v, Outcome outcome) {
    switch (outcome) {
    case Outcome::Death: return v.death;
    case Outcome::ErRedCode: return v.er_red_code;
    case Outcome::Hospitalisation: return v.hospitalisation;
    case Outcome::DisabilityOnset: return v.disability_onset;
    case Outcome::DementiaOnset: return v.dementia_onset;
    case Outcome::FemurFracture: return v.femur_fracture;
    }
    return false;
}

bool outcome_is_incidence(Outcome outcome) {
    return outcome == Outcome::DisabilityOnset || outcome == Outcome::DementiaOnset;
}

bool outcome_baseline_flag(const OutcomeVector& v, Outcome outcome) {
    switch (outcome) {
    case Outcome::DisabilityOnset: return v.baseline_disability;
    case Outcome::DementiaOnset: return v.baseline_dementia;
    default: return false;
    }
}

CohortSpec CohortSpec::for_outcome_year(int y, int min_age) {
    CohortSpec spec;
    spec.baseline_start = Date{y - 2, 1, 1};
    spec.baseline_end = Date{y - 1, 12, 31};
    spec.outcome_year = y;
    spec.min_age = min_age;
    return spec;
}

void CohortSpec::validate() const {
    if (!(baseline_start < baseline_end))
        throw DataError("cohort spec: baseline_start must precede baseline_end");
    if (baseline_end.year >= outcome_year)
        throw DataError("cohort spec: baseline window must end before the outcome year");
    if (min_age < 0) throw DataError("cohort spec: min_age must be non-negative");
}

ValidationReport validate_cohort(const Cohort& cohort) {
    ValidationReport report;
    cohort.spec.validate();
    std::unordered_set<std::string> seen;
    seen.reserve(cohort.subjects.size() * 2);
    const Date outcome_start = Date::first_of_year(cohort.spec.outcome_year);
    const Date outcome_end = Date::last_of_year(cohort.spec.outcome_year);
    for (const auto& s : cohort.subjects) {
        if (s.id.empty())
            report.violations.push_back({s.id, "id", "empty subject id"});
        else if (!seen.insert(s.id).second)
            report.violations.push_back({s.id, "id", "duplicate subject id"});
        if (s.age_years < cohort.spec.min_age)
            report.violations.push_back(
                {s.id, "age", fmt::format("age {} below cohort minimum {}", s.age_years,
                                          cohort.spec.min_age)});
        for (const auto& r : s.baseline_records) {
            if (r.date < cohort.spec.baseline_start || cohort.spec.baseline_end < r.date)
                report.violations.push_back(
                    {s.id, "baseline_window",
                     fmt::format("{} record dated {} outside baseline window", to_string(r.flow),
                                 r.date.to_string())});
            if (static_cast<int>(r.codes.size()) > max_diagnoses(r.flow))
                report.violations.push_back(
                    {s.id, "code_slots",
                     fmt::format("{} record carries {} codes (limit {})", to_string(r.flow),
                                 r.codes.size(), max_diagnoses(r.flow))});
        }
        for (const auto& r : s.outcome_records) {
            if (r.date < outcome_start || outcome_end < r.date)
                report.violations.push_back(
                    {s.id, "outcome_window",
                     fmt::format("{} record dated {} outside outcome year", to_string(r.flow),
                                 r.date.to_string())});
        }
        if (s.outcomes.disability_onset && s.outcomes.baseline_disability)
            report.violations.push_back(
                {s.id, "onset", "disability onset flagged despite baseline disability"});
        if (s.outcomes.dementia_onset && s.outcomes.baseline_dementia)
            report.violations.push_back(
                {s.id, "onset", "dementia onset flagged despite baseline dementia"});
        if (s.outcomes.death && !s.death_date)
            report.violations.push_back({s.id, "death", "death flagged without a death date"});
    }
    return report;
}

namespace {

json record_to_json(const FlowRecord& r) {
    json codes = json::array();
    for (const auto& c : r.codes)
        codes.push_back({{"sys", to_string(c.system)}, {"code", c.code}, {"pos", c.position}});
    json j{{"flow", to_string(r.flow)}, {"date", r.date.to_string()}, {"codes", std::move(codes)}};
    if (!r.attributes.empty()) {
        json attrs = json::object();
        for (const auto& a : r.attributes) attrs[a.key] = a.value;
        j["attrs"] = std::move(attrs);
    }
    return j;
}

FlowRecord record_from_json(const json& j) {
    FlowRecord r;
    r.flow = flow_kind_from_string(j.at("flow").get<std::string>());
    r.date = Date::parse(j.at("date").get<std::string>());
    for (const auto& c : j.at("codes")) {
        CodeEntry e;
        e.system = code_system_from_string(c.at("sys").get<std::string>());
        e.code = c.at("code").get<std::string>();
        e.position = c.at("pos").get<int>();
        r.codes.push_back(std::move(e));
    }
    if (j.contains("attrs"))
        for (const auto& [k, v] : j.at("attrs").items())
            r.attributes.push_back({k, v.get<std::string>()});
    return r;
}

json outcomes_to_json(const OutcomeVector& v) {
    return json{{"death", v.death},
                {"er_red_code", v.er_red_code},
                {"hospitalisation", v.hospitalisation},
                {"disability_onset", v.disability_onset},
                {"dementia_onset", v.dementia_onset},
                {"femur_fracture", v.femur_fracture},
                {"baseline_disability", v.baseline_disability},
                {"baseline_dementia", v.baseline_dementia}};
}

OutcomeVector outcomes_from_json(const json& j) {
    OutcomeVector v;
    v.death = j.at("death").get<bool>();
    v.er_red_code = j.at("er_red_code").get<bool>();
    v.hospitalisation = j.at("hospitalisation").get<bool>();
    v.disability_onset = j.at("disability_onset").get<bool>();
    v.dementia_onset = j.at("dementia_onset").get<bool>();
    v.femur_fracture = j.at("femur_fracture").get<bool>();
    v.baseline_disability = j.at("baseline_disability").get<bool>();
    v.baseline_dementia = j.at("baseline_dementia").get<bool>();
    return v;
}

} // namespace

void write_cohort_ndjson(const Cohort& cohort, std::ostream& out) {
    json header{{"kind", "cohort"},
                {"baseline_start", cohort.spec.baseline_start.to_string()},
                {"baseline_end", cohort.spec.baseline_end.to_string()},
                {"outcome_year", cohort.spec.outcome_year},
                {"min_age", cohort.spec.min_age},
                {"n_subjects", cohort.subjects.size()}};
    out << header.dump() << '\n';
    for (const auto& s : cohort.subjects) {
        json j{{"id", s.id},
               {"sex", to_string(s.sex)},
               {"age", s.age_years},
               {"outcomes", outcomes_to_json(s.outcomes)}};
        if (s.area_id) j["area"] = *s.area_id;
        if (s.death_date) j["death_date"] = s.death_date->to_string();
        json base = json::array();
        for (const auto& r : s.baseline_records) base.push_back(record_to_json(r));
        j["baseline_records"] = std::move(base);
        json outr = json::array();
        for (const auto& r : s.outcome_records) outr.push_back(record_to_json(r));
        j["outcome_records"] = std::move(outr);
        out << j.dump() << '\n';
    }
}

void write_cohort_ndjson(const Cohort& cohort, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError(fmt::format("cannot open '{}' for writing", path));
    write_cohort_ndjson(cohort, out);
    if (!out) throw DataError(fmt::format("failed writing cohort snapshot '{}'", path));
}

Cohort read_cohort_ndjson(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw DataError("cohort snapshot is empty");
    json header;
    try {
        header = json::parse(line);
    } catch (const json::exception& e) {
        throw DataError(fmt::format("bad cohort header: {}", e.what()));
    }
    if (header.value("kind", "") != std::string("cohort"))
        throw DataError("cohort snapshot header missing kind=cohort");
    Cohort cohort;
    cohort.spec.baseline_start = Date::parse(header.at("baseline_start").get<std::string>());
    cohort.spec.baseline_end = Date::parse(header.at("baseline_end").get<std::string>());
    cohort.spec.outcome_year = header.at("outcome_year").get<int>();
    cohort.spec.min_age = header.at("min_age").get<int>();
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw DataError(fmt::format("bad cohort line {}: {}", line_no, e.what()));
        }
        Subject s;
        s.id = j.at("id").get<std::string>();
        s.sex = sex_from_string(j.at("sex").get<std::string>());
        s.age_years = j.at("age").get<int>();
        if (j.contains("area")) s.area_id = j.at("area").get<std::int32_t>();
        if (j.contains("death_date")) s.death_date = Date::parse(j.at("death_date").get<std::string>());
        for (const auto& r : j.at("baseline_records")) s.baseline_records.push_back(record_from_json(r));
        for (const auto& r : j.at("outcome_records")) s.outcome_records.push_back(record_from_json(r));
        s.outcomes = outcomes_from_json(j.at("outcomes"));
        cohort.subjects.push_back(std::move(s));
    }
    return cohort;
}

Cohort read_cohort_ndjson(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError(fmt::format("cannot open cohort snapshot '{}'", path));
    return read_cohort_ndjson(in);
}

} // namespace frailty
