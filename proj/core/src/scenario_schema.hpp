#pragma once

#include <set>
#include <string>
#include <vector>

#include "cisim/scenario.hpp"

namespace cisim::scenario::detail {

struct Schema {
  std::string name;
  std::map<std::string, ParamValue> parameters;
  std::set<std::string> initial_keys;
  InitialStateSpec initial;
  TimeGridSpec grid;
  std::vector<std::string> truncation_keys;
  std::map<std::string, int> fixed_truncations;  // defaults that are not derived from parameters
  std::string convergence_rows = "all";
};

const Schema& schema(const std::string& name);

// Truncation defaults derived from the physical parameters of one row.
std::map<std::string, int> auto_truncations(const std::string& scenario,
                                            const std::map<std::string, double>& row);

// Per-row truncations: explicit config values win over the derived ones.
std::map<std::string, int> row_truncations(const ScenarioConfig& cfg,
                                           const std::map<std::string, double>& row);

}  // namespace cisim::scenario::detail
