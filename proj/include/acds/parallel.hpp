#ifndef ACDS_PARALLEL_HPP
#define ACDS_PARALLEL_HPP

namespace acds {

/// Selects the serial reference kernel or its OpenMP counterpart.
/// Both produce bit-identical results; the serial path is kept for testing.
enum class Exec { Serial, Parallel };

/// Number of OpenMP threads available to parallel kernels (1 without OpenMP).
int max_threads();

/// True when the library was compiled with OpenMP.
bool openmp_enabled();

} // namespace acds

#endif // ACDS_PARALLEL_HPP
