#pragma once

namespace locaug {

// Keep freed activation buffers inside the heap instead of returning them
// to the OS after every step. No-op outside glibc.
void tune_allocator();

}  // namespace locaug
