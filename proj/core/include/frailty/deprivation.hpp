#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "frailty/cohort.hpp"

namespace frailty {

// Census-style factor table: one row per area with its population and the
// five deprivation factors (shares/densities; higher = more deprived).
struct DeprivationTable {
  std::vector<std::string> factor_names;
  struct Area {
    std::int32_t area_id = 0;
    double population = 0.0;
    std::vector<double> factors;  // aligned with factor_names
  };
  std::vector<Area> areas;
};

// Factor columns expected by the CSV loader, in order.
std::vector<std::string> default_deprivation_factors();

// CSV with header: area_id,population,<factor...>. Throws DataError.
DeprivationTable load_deprivation_table(const std::string& path);

// Deprivation index per area: each factor standardized to zero mean and unit
// variance across areas (population-weighted), then summed. Quintiles are
// population-weighted fifths of the areas ordered by index (ties by area id);
// boundary areas fall into the lower quintile.
struct DeprivationIndex {
  std::vector<std::int32_t> area_ids;
  std::vector<double> di;
  std::vector<int> quintile;  // 1..5 per area
  std::vector<std::string> warnings;  // e.g. constant factors
};

DeprivationIndex deprivation_index(const DeprivationTable& table);

// Maps each subject to its area's quintile; 0 when the subject has no area
// or the area is missing from the table.
struct DeprivationAssignment {
  std::vector<int> quintile;  // per subject, 0 = unassigned
  std::size_t missing = 0;    // subjects excluded for missing/unknown areas
};

DeprivationAssignment assign_deprivation(const Cohort& cohort,
                                         const DeprivationIndex& index);

}  // namespace frailty
