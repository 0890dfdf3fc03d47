#pragma once

// Process-wide heap accounting. The counters live here; the global
// operator new/delete replacements that feed them live in alloc_hooks.hpp,
// which exactly one translation unit per program may include.

#include <atomic>
#include <cstdint>

namespace lowlight::alloc {

inline std::atomic<std::int64_t> g_current{0};
inline std::atomic<std::int64_t> g_peak{0};
inline std::atomic<bool> g_hooks_installed{false};

inline void note_alloc(std::int64_t bytes) noexcept {
  const auto now = g_current.fetch_add(bytes, std::memory_order_relaxed) + bytes;
  auto peak = g_peak.load(std::memory_order_relaxed);
  while (now > peak && !g_peak.compare_exchange_weak(peak, now, std::memory_order_relaxed)) {
  }
}

inline void note_free(std::int64_t bytes) noexcept { g_current.fetch_sub(bytes, std::memory_order_relaxed); }

inline bool hooks_installed() noexcept { return g_hooks_installed.load(); }
inline std::int64_t current_bytes() noexcept { return g_current.load(); }
inline std::int64_t peak_bytes() noexcept { return g_peak.load(); }

/// Restarts peak tracking from the current live total.
inline void reset_peak() noexcept { g_peak.store(g_current.load()); }

}  // namespace lowlight::alloc
