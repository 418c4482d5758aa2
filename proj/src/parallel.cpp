#include "acds/parallel.hpp"

#ifdef ACDS_HAVE_OPENMP
#include <omp.h>
#endif

namespace acds {

int max_threads()
{
#ifdef ACDS_HAVE_OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

bool openmp_enabled()
{
#ifdef ACDS_HAVE_OPENMP
    return true;
#else
    return false;
#endif
}

} // namespace acds
