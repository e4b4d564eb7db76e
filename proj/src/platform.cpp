#include "locaug/platform.hpp"

#include <cstdlib>  // defines __GLIBC__

#if defined(__GLIBC__)
#include <malloc.h>
#endif

namespace locaug {

void tune_allocator() {
#if defined(__GLIBC__)
  static const bool done = [] {
    // 32 MiB is the largest value glibc accepts; larger ones are ignored.
    mallopt(M_MMAP_THRESHOLD, 32 << 20);
    mallopt(M_TRIM_THRESHOLD, 1 << 30);
    mallopt(M_TOP_PAD, 64 << 20);
    return true;
  }();
  (void)done;
#endif
}

}  // namespace locaug
