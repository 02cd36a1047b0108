#pragma once

#include <cmath>

namespace cran::units {

inline double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
inline double watts_to_dbm(double w) { return 10.0 * std::log10(w) + 30.0; }
inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double x) { return 10.0 * std::log10(x); }

/// Target rate R = log2(1 + sinr) in bits per channel use.
inline double target_rate(double sinr_linear) { return std::log2(1.0 + sinr_linear); }

}  // namespace cran::units
