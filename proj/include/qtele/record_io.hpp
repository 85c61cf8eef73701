#pragma once

// Text formats:
//   record_<id>.csv   header "t,J", one row per sample
//   record_<id>.meta  "key=value" lines: dt, eta, kappa, t_beta, t_m, boundaries
//   retrodiction CSV  trajectory,p_0+,p_0-,p_1+,p_1-,argmax,margin
// Floats are written in shortest round-trip form, so reading a file back
// reproduces every sample bit for bit.

#include "qtele/pqs.hpp"
#include "qtele/sme.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>

namespace qtele {

std::string format_double(double v);
double parse_double(std::string_view s);

void write_record_csv(std::ostream& out, const HomodyneRecord& record);
void write_record_meta(std::ostream& out, const HomodyneRecord& record);

/// Parses samples from the CSV and dt/eta/kappa/boundaries from the sidecar.
HomodyneRecord read_record(std::istream& csv, std::istream& meta);

void save_record(const std::filesystem::path& dir, const std::string& id, const HomodyneRecord& record);
HomodyneRecord load_record(const std::filesystem::path& csv_path);

inline constexpr std::string_view kRetrodictionHeader = "trajectory,p_0+,p_0-,p_1+,p_1-,argmax,margin";
std::string retrodiction_row(const std::string& trajectory_id, const RetrodictionResult& r);
RetrodictionResult parse_retrodiction_row(std::string_view row, std::string* trajectory_id = nullptr);

}  // namespace qtele
