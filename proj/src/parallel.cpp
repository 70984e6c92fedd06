#include "capforge/parallel.hpp"

#include <cstdlib>

namespace capforge {

std::size_t default_workers() {
  if (const char* env = std::getenv("CAPFORGE_WORKERS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<std::size_t>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace capforge
