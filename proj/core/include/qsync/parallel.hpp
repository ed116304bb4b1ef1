#pragma once

#include <functional>

namespace qsync {

// Worker count for data-parallel loops. Starts from QSYNC_NUM_THREADS when
// set, otherwise the OpenMP default (1 without OpenMP).
int thread_count();
void set_thread_count(int n);

// Runs body(i) for i in [begin, end). Iterations must be independent.
void parallel_for(int begin, int end, const std::function<void(int)>& body);

}  // namespace qsync
