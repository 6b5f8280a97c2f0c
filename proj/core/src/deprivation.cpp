#include "frailty/deprivation.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include <fmt/format.h>

#include "frailty/csv.hpp"
#include "frailty/errors.hpp"

namespace frailty {

std::vector<std::string> default_deprivation_factors() {
  return {"low_education", "unemployment", "rented_dwellings", "single_parent",
          "housing_density"};
}

namespace {

double parse_double(const std::string& text, const char* what, std::size_t line) {
  try {
    std::size_t used = 0;
    const double value = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return value;
  } catch (const std::exception&) {
    throw DataError(fmt::format("line {}: bad {} value '{}'", line, what, text));
  }
}

DeprivationTable read_table(CsvReader& reader) {
  DeprivationTable table;
  const int c_area = reader.require_column("area_id");
  const int c_pop = reader.require_column("population");
  std::vector<int> c_factors;
  for (const std::string& name : reader.header()) {
    if (name == "area_id" || name == "population") continue;
    table.factor_names.push_back(name);
    c_factors.push_back(reader.require_column(name));
  }
  if (table.factor_names.empty()) {
    throw DataError(fmt::format("{}: no factor columns beyond area_id/population",
                                reader.path()));
  }

  std::vector<std::string> fields;
  std::map<std::int32_t, bool> seen;
  while (reader.next(fields)) {
    if (fields.size() != reader.header().size()) {
      throw DataError(fmt::format("{}:{}: expected {} fields, found {}", reader.path(),
                                  reader.line_number(), reader.header().size(),
                                  fields.size()));
    }
    DeprivationTable::Area area;
    try {
      area.area_id = static_cast<std::int32_t>(
          parse_double(fields[static_cast<std::size_t>(c_area)], "area_id",
                       reader.line_number()));
      area.population = parse_double(fields[static_cast<std::size_t>(c_pop)],
                                     "population", reader.line_number());
      for (int c : c_factors) {
        area.factors.push_back(parse_double(fields[static_cast<std::size_t>(c)],
                                            "factor", reader.line_number()));
      }
    } catch (const DataError& e) {
      throw DataError(fmt::format("{}: {}", reader.path(), e.what()));
    }
    if (!(area.population > 0.0)) {
      throw DataError(fmt::format("{}:{}: area {} has non-positive population",
                                  reader.path(), reader.line_number(), area.area_id));
    }
    if (!seen.emplace(area.area_id, true).second) {
      throw DataError(fmt::format("{}:{}: duplicate area {}", reader.path(),
                                  reader.line_number(), area.area_id));
    }
    table.areas.push_back(std::move(area));
  }
  if (table.areas.empty()) {
    throw DataError(fmt::format("{}: factor table has no areas", reader.path()));
  }
  std::sort(table.areas.begin(), table.areas.end(),
            [](const auto& a, const auto& b) { return a.area_id < b.area_id; });
  return table;
}

}  // namespace

DeprivationTable load_deprivation_table(const std::string& path) {
  CsvReader reader(path);
  return read_table(reader);
}

DeprivationIndex deprivation_index(const DeprivationTable& table) {
  if (table.areas.empty()) throw DataError("deprivation index: empty factor table");
  const std::size_t n_factors = table.factor_names.size();
  for (const auto& area : table.areas) {
    if (area.factors.size() != n_factors) {
      throw DataError(fmt::format("deprivation index: area {} has {} factors, expected {}",
                                  area.area_id, area.factors.size(), n_factors));
    }
  }

  DeprivationIndex index;
  index.di.assign(table.areas.size(), 0.0);
  for (const auto& area : table.areas) index.area_ids.push_back(area.area_id);

  double total_pop = 0.0;
  for (const auto& area : table.areas) total_pop += area.population;

  for (std::size_t f = 0; f < n_factors; ++f) {
    double mean = 0.0;
    for (const auto& area : table.areas) {
      mean += area.population * area.factors[f];
    }
    mean /= total_pop;
    double var = 0.0;
    for (const auto& area : table.areas) {
      const double d = area.factors[f] - mean;
      var += area.population * d * d;
    }
    var /= total_pop;
    if (var <= 0.0) {
      index.warnings.push_back(
          fmt::format("factor '{}' is constant across areas and contributes nothing",
                      table.factor_names[f]));
      continue;
    }
    const double sd = std::sqrt(var);
    for (std::size_t a = 0; a < table.areas.size(); ++a) {
      index.di[a] += (table.areas[a].factors[f] - mean) / sd;
    }
  }

  // Population-weighted fifths over areas ordered by index.
  std::vector<std::size_t> order(table.areas.size());
  for (std::size_t a = 0; a < order.size(); ++a) order[a] = a;
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    if (index.di[x] != index.di[y]) return index.di[x] < index.di[y];
    return table.areas[x].area_id < table.areas[y].area_id;
  });
  index.quintile.assign(table.areas.size(), 0);
  double cumulative = 0.0;
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    const std::size_t a = order[pos];
    cumulative += table.areas[a].population;
    // The quintile an area's population midpoint reaches; boundary areas fall
    // into the lower quintile.
    const double reach = cumulative / total_pop;
    const int q = static_cast<int>(std::ceil(reach * 5.0 - 1e-9));
    index.quintile[a] = std::clamp(q, 1, 5);
  }
  return index;
}

DeprivationAssignment assign_deprivation(const Cohort& cohort,
                                         const DeprivationIndex& index) {
  std::map<std::int32_t, int> quintile_of;
  for (std::size_t a = 0; a < index.area_ids.size(); ++a) {
    quintile_of[index.area_ids[a]] = index.quintile[a];
  }
  DeprivationAssignment out;
  out.quintile.assign(cohort.size(), 0);
  for (std::size_t i = 0; i < cohort.size(); ++i) {
    const auto& area = cohort.subjects[i].area_id;
    if (!area.has_value()) {
      ++out.missing;
      continue;
    }
    const auto it = quintile_of.find(*area);
    if (it == quintile_of.end()) {
      ++out.missing;
      continue;
    }
    out.quintile[i] = it->second;
  }
  return out;
}

}  // namespace frailty
