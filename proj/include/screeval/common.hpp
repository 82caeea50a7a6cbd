#pragma once

#include <array>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>

namespace screeval {

// Error categories surfaced by the library. The CLI maps them onto exit codes.
enum class ErrorCode {
  FileNotFound,
  HeaderMismatch,
  MissingScores,
  EmptyPopulation,
  EmptyClass,
  DegenerateResamples,
  UnknownAxis,
  InfeasibleBlueprint,
  InvalidConfig,
  Internal,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// ---------------------------------------------------------------------------
// Calendar dates. Day-granular; arithmetic is in whole days.
// ---------------------------------------------------------------------------

class Date {
 public:
  constexpr Date() = default;
  constexpr explicit Date(std::chrono::sys_days days) : days_(days) {}

  static constexpr Date from_ymd(int y, unsigned m, unsigned d) {
    return Date(std::chrono::sys_days(std::chrono::year_month_day(
        std::chrono::year(y), std::chrono::month(m), std::chrono::day(d))));
  }

  // Strict ISO-8601 YYYY-MM-DD.
  static std::optional<Date> parse(std::string_view text) {
    if (text.size() != 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
    auto field = [&](size_t pos, size_t len) -> std::optional<int> {
      int value = 0;
      auto [ptr, ec] = std::from_chars(text.data() + pos, text.data() + pos + len, value);
      if (ec != std::errc() || ptr != text.data() + pos + len) return std::nullopt;
      return value;
    };
    auto y = field(0, 4), m = field(5, 2), d = field(8, 2);
    if (!y || !m || !d || *m < 1 || *d < 1) return std::nullopt;
    std::chrono::year_month_day ymd{std::chrono::year(*y),
                                    std::chrono::month(static_cast<unsigned>(*m)),
                                    std::chrono::day(static_cast<unsigned>(*d))};
    if (!ymd.ok()) return std::nullopt;
    return Date(std::chrono::sys_days(ymd));
  }

  std::string to_string() const {
    std::chrono::year_month_day ymd{days_};
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    return buf;
  }

  constexpr Date plus_days(int n) const { return Date(days_ + std::chrono::days(n)); }

  // Signed whole days from `earlier` to this date.
  constexpr int days_since(Date earlier) const {
    return static_cast<int>((days_ - earlier.days_).count());
  }

  constexpr auto operator<=>(const Date&) const = default;

 private:
  std::chrono::sys_days days_{};
};

// ---------------------------------------------------------------------------
// Enum <-> token tables. Each serialized enum specializes EnumTraits with a
// `values` array of (value, token) pairs in canonical order.
// ---------------------------------------------------------------------------

template <typename E>
struct EnumTraits;

template <typename E>
constexpr std::string_view to_token(E value) {
  for (const auto& [v, token] : EnumTraits<E>::values) {
    if (v == value) return token;
  }
  return "?";
}

template <typename E>
constexpr std::optional<E> parse_token(std::string_view token) {
  for (const auto& [v, t] : EnumTraits<E>::values) {
    if (t == token) return v;
  }
  return std::nullopt;
}

template <typename E>
constexpr size_t enum_index(E value) {
  size_t i = 0;
  for (const auto& [v, token] : EnumTraits<E>::values) {
    if (v == value) return i;
    ++i;
  }
  return i;
}

template <typename E>
constexpr auto enum_values() {
  std::array<E, EnumTraits<E>::values.size()> out{};
  for (size_t i = 0; i < out.size(); ++i) out[i] = EnumTraits<E>::values[i].first;
  return out;
}

// Shortest round-trip decimal representation.
inline std::string format_double(double value) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

inline std::optional<double> parse_double(std::string_view text) {
  double value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) {
    return std::nullopt;
  }
  return value;
}

template <typename Int>
std::optional<Int> parse_int(std::string_view text) {
  Int value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) {
    return std::nullopt;
  }
  return value;
}

// Half-to-even rounding at `digits` decimals, rendered with fixed precision.
inline double round_half_even(double value, int digits) {
  const double scale = std::pow(10.0, digits);
  return std::nearbyint(value * scale) / scale;
}

inline std::string format_fixed(double value, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, round_half_even(value, digits));
  return buf;
}

}  // namespace screeval
