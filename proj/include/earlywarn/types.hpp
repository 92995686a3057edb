#pragma once

#include <chrono>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace ew {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Matrix = MatrixX<double>;
using Vector = VectorX<double>;
using IndexVector = Eigen::VectorXi;

using Instant = std::chrono::sys_seconds;
using Date = std::chrono::sys_days;
using Seconds = std::chrono::seconds;

inline constexpr Seconds kDay{86400};
inline constexpr Seconds kWeek{7 * 86400};

// Parses "YYYY-MM-DDTHH:MM:SSZ" (or an explicit +HH:MM / -HH:MM offset) into UTC.
Instant parse_instant(const std::string& text);
// Parses "YYYY-MM-DD".
Date parse_date(const std::string& text);
std::string format_instant(Instant t);
std::string format_date(Date d);

// Counter-based seeding: every random stream is derived from the run seed plus coordinates.
std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0,
                          std::uint64_t c = 0, std::uint64_t d = 0);
std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace ew
