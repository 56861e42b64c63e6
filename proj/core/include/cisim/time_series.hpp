#pragma once

#include <string>
#include <vector>

#include "cisim/linalg.hpp"

namespace cisim {

struct TimeSeries {
  std::string label;
  std::vector<double> times;  // us
  std::vector<cplx> values;

  std::vector<double> real() const;
  std::size_t size() const { return times.size(); }
};

const TimeSeries& find_series(const std::vector<TimeSeries>& all, const std::string& label);

}  // namespace cisim
