// include/asrnoise/parallel.hpp

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

#ifndef ASRNOISE_PARALLEL_HPP_
#define ASRNOISE_PARALLEL_HPP_

#include <cstddef>

namespace asrnoise::parallel {

// Process-wide worker count for the OpenMP kernels. 1 = serial. The CLI sets
// this from --jobs; 0 or negative requests one worker per hardware thread.
int max_jobs();
void set_max_jobs(int jobs);

// Number of workers actually available (1 when built without OpenMP).
int hardware_jobs();

namespace detail {
void run_indexed(std::size_t n, void (*trampoline)(void*, std::size_t),
                 void* ctx);
}

/// Runs fn(i) for i in [0, n). Iterations must be independent, and any shared
/// output must be indexed by i so the result never depends on scheduling.
template <typename F>
void parallel_for(std::size_t n, F&& fn) {
  auto trampoline = [](void* ctx, std::size_t i) {
    (*static_cast<F*>(ctx))(i);
  };
  detail::run_indexed(n, trampoline, &fn);
}

}  // namespace asrnoise::parallel

#endif  // ASRNOISE_PARALLEL_HPP_
