// src/parallel.cpp

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "asrnoise/parallel.hpp"

#include <atomic>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace asrnoise::parallel {

namespace {
std::atomic<int> g_max_jobs{1};
}

int hardware_jobs() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

int max_jobs() { return g_max_jobs.load(std::memory_order_relaxed); }

void set_max_jobs(int jobs) {
  if (jobs <= 0) jobs = hardware_jobs();
  g_max_jobs.store(jobs, std::memory_order_relaxed);
}

namespace detail {

void run_indexed(std::size_t n, void (*trampoline)(void*, std::size_t),
                 void* ctx) {
#ifdef _OPENMP
  const int jobs = max_jobs();
  if (jobs > 1 && n > 1) {
#pragma omp parallel for schedule(static) num_threads(jobs)
    for (long long i = 0; i < static_cast<long long>(n); ++i) {
      trampoline(ctx, static_cast<std::size_t>(i));
    }
    return;
  }
#endif
  for (std::size_t i = 0; i < n; ++i) trampoline(ctx, i);
}

}  // namespace detail

}  // namespace asrnoise::parallel
