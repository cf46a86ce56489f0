#ifndef ARCD_UTIL_HPP
#define ARCD_UTIL_HPP

#include <cstddef>
#include <functional>
#include <string>

namespace arcd {

/** Fixed 17-significant-digit rendering used by all report output. */
std::string fmt17(double v);

/** Worker count: requested if > 0, else ARCD_THREADS, else hardware. */
int thread_count(int requested);

/**
 * Runs fn(i) for i in [0, count) across `threads` workers (chunked by
 * index, deterministic assignment).  The first exception, if any, is
 * rethrown on the calling thread after all workers join.
 */
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& fn);

/** Writes via a temp file in the same directory, then renames over. */
void atomic_write_file(const std::string& path, const std::string& content);

namespace log {

enum class Level { Quiet = 0, Info = 1, Debug = 2 };

void set_level(Level lv);
Level level();

/** One stderr line, prefixed, emitted only at or above the set level. */
void info(const std::string& msg);
void debug(const std::string& msg);

} // namespace log

} // namespace arcd

#endif
