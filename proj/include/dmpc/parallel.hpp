/*
 * Copyright 2026 The dmpc Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef DMPC_PARALLEL_HPP
#define DMPC_PARALLEL_HPP

#include <utility>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace dmpc {

/// Number of workers used when a caller passes jobs <= 0.
inline int default_jobs() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

/// Run body(i) for i in [0, n).  jobs == 1 is the serial reference path;
/// jobs > 1 uses OpenMP worker threads.  Bodies must write results to
/// index-addressed slots only, so the outcome is identical for any job
/// count; nothing here reduces floats across iterations.
template <class Body>
void parallel_for(int n, int jobs, Body&& body) {
  if (jobs <= 0) jobs = default_jobs();
#ifdef _OPENMP
  if (jobs > 1 && n > 1) {
#pragma omp parallel for schedule(dynamic) num_threads(jobs)
    for (int i = 0; i < n; ++i) {
      body(i);
    }
    return;
  }
#endif
  for (int i = 0; i < n; ++i) {
    body(i);
  }
}

}  // namespace dmpc

#endif  // DMPC_PARALLEL_HPP
