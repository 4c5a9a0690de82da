#pragma once

namespace sflick {

/// Caps module-internal parallelism. Values < 1 restore the runtime default.
void set_thread_count(int threads);
int thread_count();

}  // namespace sflick
