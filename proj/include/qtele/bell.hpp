#pragma once

#include <array>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace qtele {

/// Joint outcome of the qubit-A / cavity Bell measurement: qubit A in |qubit>,
/// cavity in |field_sign * beta>.
struct BellOutcome {
  int qubit = 0;
  int field_sign = +1;

  /// Order (0,+), (0,-), (1,+), (1,-).
  constexpr std::size_t index() const {
    return static_cast<std::size_t>(qubit * 2 + (field_sign < 0 ? 1 : 0));
  }

  static constexpr BellOutcome from_index(std::size_t i) {
    if (i > 3) throw std::out_of_range("BellOutcome index must be 0..3");
    return {static_cast<int>(i / 2), (i % 2 == 0) ? +1 : -1};
  }

  static constexpr std::array<BellOutcome, 4> all() {
    return {from_index(0), from_index(1), from_index(2), from_index(3)};
  }

  /// "0+", "0-", "1+", "1-"
  std::string label() const {
    return std::string(1, static_cast<char>('0' + qubit)) + (field_sign < 0 ? "-" : "+");
  }

  static BellOutcome from_label(std::string_view s) {
    if (s.size() != 2 || (s[0] != '0' && s[0] != '1') || (s[1] != '+' && s[1] != '-')) {
      throw std::invalid_argument("BellOutcome: bad label '" + std::string(s) + "'");
    }
    return {s[0] - '0', s[1] == '-' ? -1 : +1};
  }

  constexpr bool operator==(const BellOutcome&) const = default;
};

}  // namespace qtele
