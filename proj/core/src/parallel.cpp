#include "qndsim/parallel.hpp"

#include <algorithm>

namespace qndsim {
namespace {

std::atomic<int> configured_threads{1};

}  // namespace

void set_thread_count(int n) { configured_threads = std::max(0, n); }

int thread_count() {
    const int n = configured_threads.load();
    if (n > 0) {
        return n;
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace qndsim
