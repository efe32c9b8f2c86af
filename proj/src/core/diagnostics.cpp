#include "pex/core/diagnostics.hpp"

#include <atomic>
#include <iostream>

namespace pex {

namespace {
std::atomic<bool> g_enabled{true};
std::atomic<long> g_count{0};
}  // namespace

void warn(std::string_view msg) {
  ++g_count;
  if (g_enabled.load()) std::cerr << "pex: warning: " << msg << '\n';
}

void set_warnings_enabled(bool enabled) { g_enabled = enabled; }

long warning_count() { return g_count.load(); }

}  // namespace pex
