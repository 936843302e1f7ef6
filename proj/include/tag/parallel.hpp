#pragma once

namespace tag {

/// Kernels come in two flavors: the OpenMP data-parallel path used in
/// production and a plain loop kept as the reference for tests.
enum class Exec { Parallel, Serial };

/// Sets the OpenMP team size; n <= 0 restores the runtime default.
void set_threads(int n);
int max_threads();

}  // namespace tag
