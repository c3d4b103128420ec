#include "causaug/parallel.hpp"

#include <cstdlib>
#include <string>

namespace causaug {

std::size_t default_thread_count() {
  if (const char* env = std::getenv("CAUSAUG_THREADS")) {
    try {
      std::size_t used = 0;
      const long long n = std::stoll(env, &used);
      if (used == std::string(env).size() && n > 0) return static_cast<std::size_t>(n);
    } catch (const std::exception&) {
    }
  }
  return std::max<unsigned>(1, std::thread::hardware_concurrency());
}

}  // namespace causaug
