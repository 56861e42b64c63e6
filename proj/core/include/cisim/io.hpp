#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "cisim/fit.hpp"
#include "cisim/phase_space.hpp"
#include "cisim/quantum_core.hpp"
#include "cisim/time_series.hpp"

namespace cisim::io {

// Fixed 9-significant-digit scientific notation.
std::string format_number(double v);

// Header row, then one row per index; `columns` must have equal lengths.
void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& columns);

// t_us, then the real part of each series (all series share the time axis).
void write_time_series_csv(const std::filesystem::path& path, const std::vector<TimeSeries>& series);

// First row: corner label and Im(alpha) axis; first column: Re(alpha) axis.
void write_wigner_csv(const std::filesystem::path& path, const WignerGrid& grid);

// Header row, then (t_us, value) or (t_us, delta_khz, value).
fit::DataSet read_fit_csv(const std::filesystem::path& path);
void write_fit_csv(const std::filesystem::path& path, const fit::DataSet& data);

// {"dims": [...], "kind": "pure"|"mixed", "real": ..., "imag": ...}
void write_state_json(const std::filesystem::path& path, const QuantumState& state);
QuantumState read_state_json(const std::filesystem::path& path);

std::string sha256_file(const std::filesystem::path& path);

}  // namespace cisim::io
