#include "iouf/parallel.hpp"

namespace iouf {
namespace {
std::atomic<unsigned> g_threads{0};
}
void set_worker_threads(unsigned n) { g_threads.store(n); }
unsigned worker_threads() {
  const unsigned n = g_threads.load();
  if (n > 0) return n;
  return std::max(1u, std::thread::hardware_concurrency());
}
}  // namespace iouf
