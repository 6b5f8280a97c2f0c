#pragma once

#include "frailty/date.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace frailty {

using SubjectId = std::string;

enum class Sex : std::uint8_t { Male, Female };

/// The eight administrative source databases.
enum class FlowKind : std::uint8_t {
    HealthRegistry,
    HospitalDischarge,
    ERAdmission,
    Psychiatry,
    HomeCare,
    Exemption,
    Pharmaceutical,
    Outpatient,
};
inline constexpr int kFlowKindCount = 8;

enum class CodeSystem : std::uint8_t { Icd9Cm, Atc, ExemptionCode, ServiceCode, Icd10 };
inline constexpr int kCodeSystemCount = 5;

const char* to_string(FlowKind flow);
const char* to_string(CodeSystem system);
const char* to_string(Sex sex);
FlowKind flow_kind_from_string(const std::string& name);   // throws DataError
CodeSystem code_system_from_string(const std::string& name); // throws DataError
Sex sex_from_string(const std::string& name);               // throws DataError

/// One coded entry on a record. Position 0 is the primary diagnosis;
/// positions >= 1 are concomitant.
struct CodeEntry {
    CodeSystem system = CodeSystem::Icd9Cm;
    std::string code;
    int position = 0;

    bool operator==(const CodeEntry&) const = default;
};

/// A named attribute, e.g. triage priority or stay duration.
struct Attribute {
    std::string key;
    std::string value;

    bool operator==(const Attribute&) const = default;
};

/// One row of one administrative flow.
struct FlowRecord {
    FlowKind flow = FlowKind::HospitalDischarge;
    Date date;
    std::vector<CodeEntry> codes;
    std::vector<Attribute> attributes;

    bool operator==(const FlowRecord&) const = default;

    const std::string* attribute(const std::string& key) const;
};

/// Maximum diagnosis slots per flow (primary plus concomitant).
int max_diagnoses(FlowKind flow);

/// The six adverse outcomes plus the baseline flags needed to restrict
/// dementia and disability to new onsets.
struct OutcomeVector {
    bool death = false;
    bool er_red_code = false;
    bool hospitalisation = false;
    bool disability_onset = false;
    bool dementia_onset = false;
    bool femur_fracture = false;
    bool baseline_disability = false;
    bool baseline_dementia = false;

    bool disability_prevalent() const { return baseline_disability || disability_onset; }
    bool dementia_prevalent() const { return baseline_dementia || dementia_onset; }

    bool operator==(const OutcomeVector&) const = default;
};

inline constexpr int kOutcomeCount = 6;

/// Canonical outcome order used in every table and report.
enum class Outcome : std::uint8_t {
    Death,
    ErRedCode,
    Hospitalisation,
    DisabilityOnset,
    DementiaOnset,
    FemurFracture,
};
const char* to_string(Outcome outcome);
bool outcome_flag(const OutcomeVector& v, Outcome outcome);
/// True for disability/dementia, whose AUCs are evaluated on baseline-free
/// subjects only.
bool outcome_is_incidence(Outcome outcome);
bool outcome_baseline_flag(const OutcomeVector& v, Outcome outcome);

struct Subject {
    SubjectId id;
    Sex sex = Sex::Female;
    int age_years = 0; // completed years at Jan 1 of the outcome year
    std::optional<std::int32_t> area_id;
    std::vector<FlowRecord> baseline_records;
    std::vector<FlowRecord> outcome_records; // records dated in the outcome year
    std::optional<Date> death_date;
    OutcomeVector outcomes;

    bool operator==(const Subject&) const = default;
};

/// Observation design: a two-year baseline window followed by one outcome year.
struct CohortSpec {
    Date baseline_start;
    Date baseline_end;
    int outcome_year = 0;
    int min_age = 65;

    /// The spec for outcome year y: baseline = the two preceding calendar years.
    static CohortSpec for_outcome_year(int y, int min_age = 65);
    void validate() const; // throws DataError
    bool operator==(const CohortSpec&) const = default;
};

struct Cohort {
    CohortSpec spec;
    std::vector<Subject> subjects;

    std::size_t size() const { return subjects.size(); }
};

/// One detected invariant violation.
struct Violation {
    SubjectId subject; // empty for cohort-level issues
    std::string rule;
    std::string detail;
};

struct ValidationReport {
    std::vector<Violation> violations;
    bool clean() const { return violations.empty(); }
};

/// Checks the documented type invariants: unique non-empty ids, minimum age,
/// record dates inside the observation range, diagnosis-slot limits, and the
/// onset-implies-no-baseline rule.
ValidationReport validate_cohort(const Cohort& cohort);

/// Cohort snapshot: newline-delimited JSON, one subject per line, preceded by
/// one header line carrying the cohort spec.
void write_cohort_ndjson(const Cohort& cohort, std::ostream& out);
void write_cohort_ndjson(const Cohort& cohort, const std::string& path);
Cohort read_cohort_ndjson(std::istream& in);
Cohort read_cohort_ndjson(const std::string& path);

} // namespace frailty
