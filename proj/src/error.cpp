#include "twoway/error.hpp"

#include <atomic>
#include <iostream>
#include <mutex>

namespace twoway {

namespace {
std::atomic<bool> g_warnings{true};
std::mutex g_warn_mutex;
}  // namespace

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::TooSmall: return "TooSmall";
    case ErrorCode::RankTooLarge: return "RankTooLarge";
    case ErrorCode::SingularDesign: return "SingularDesign";
    case ErrorCode::Empty: return "Empty";
    case ErrorCode::SingularOmega: return "SingularOmega";
    case ErrorCode::LagTooLarge: return "LagTooLarge";
    case ErrorCode::Degenerate: return "Degenerate";
    case ErrorCode::BadValue: return "BadValue";
    case ErrorCode::UnknownFlag: return "UnknownFlag";
    case ErrorCode::Io: return "IoError";
  }
  return "Unknown";
}

void warn(std::string_view message) {
  if (!g_warnings.load(std::memory_order_relaxed)) return;
  std::lock_guard<std::mutex> lock(g_warn_mutex);
  std::cerr << "warning: " << message << '\n';
}

void set_warnings_enabled(bool enabled) { g_warnings.store(enabled); }

bool warnings_enabled() { return g_warnings.load(); }

}  // namespace twoway
