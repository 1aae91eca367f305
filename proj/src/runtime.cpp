#include "vfikit/runtime.hpp"

#include <cstdlib>
#include <string>
#include <thread>

namespace vfikit {

int effective_threads() {
  if (const char* env = std::getenv("VFIKIT_THREADS")) {
    try {
      const int v = std::stoi(std::string(env));
      if (v >= 1) return v;
    } catch (...) {
      // fall through to the hardware default on unparsable values
    }
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

}  // namespace vfikit
