#pragma once

#include <numbers>

namespace cisim {

enum class FreqUnit { kHz, MHz, RadPerUs };

// Frequencies quoted as nu = omega / 2pi (kHz or MHz) or as angular rad/us.
// Time is always in microseconds.
struct FrequencyParam {
  double value = 0.0;
  FreqUnit unit = FreqUnit::RadPerUs;

  static constexpr FrequencyParam khz(double v) { return {v, FreqUnit::kHz}; }
  static constexpr FrequencyParam mhz(double v) { return {v, FreqUnit::MHz}; }
  static constexpr FrequencyParam rad_per_us(double v) { return {v, FreqUnit::RadPerUs}; }

  constexpr double rad_per_us() const {
    switch (unit) {
      case FreqUnit::kHz: return 2.0 * std::numbers::pi * 1e-3 * value;
      case FreqUnit::MHz: return 2.0 * std::numbers::pi * value;
      case FreqUnit::RadPerUs: return value;
    }
    return value;
  }
  constexpr double mhz() const { return rad_per_us() / (2.0 * std::numbers::pi); }
  constexpr double khz() const { return 1e3 * mhz(); }
};

namespace literals {
constexpr FrequencyParam operator""_khz(long double v) { return FrequencyParam::khz(double(v)); }
constexpr FrequencyParam operator""_khz(unsigned long long v) { return FrequencyParam::khz(double(v)); }
constexpr FrequencyParam operator""_mhz(long double v) { return FrequencyParam::mhz(double(v)); }
constexpr FrequencyParam operator""_mhz(unsigned long long v) { return FrequencyParam::mhz(double(v)); }
}  // namespace literals

}  // namespace cisim
