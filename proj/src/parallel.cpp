#include <mowave/parallel.hpp>

#include <cstdlib>
#include <string>

namespace mowave {

unsigned worker_count() {
  if (const char* env = std::getenv("MOWAVE_THREADS")) {
    try {
      const int n = std::stoi(env);
      if (n >= 1) return static_cast<unsigned>(n);
    } catch (...) {
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace mowave
