#pragma once

namespace codegemm {

// Worker count for engine and k-means loops: `requested` if positive, else
// the CODEGEMM_THREADS environment variable, else the machine's hardware
// concurrency. Never less than 1.
int resolve_threads(int requested = 0);

}  // namespace codegemm
