#pragma once

namespace vfikit {

// Worker threads parallel sections may use: VFIKIT_THREADS when set to a
// positive integer, otherwise the hardware concurrency, never less than 1.
int effective_threads();

}  // namespace vfikit
