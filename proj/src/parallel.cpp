#include "qrelax/parallel.hpp"

#include <cstdlib>
#include <string>

namespace qrelax {

unsigned worker_count() {
    static const unsigned count = [] {
        if (const char* env = std::getenv("QRELAX_THREADS")) {
            try {
                const int n = std::stoi(env);
                if (n > 0) return static_cast<unsigned>(n);
            } catch (...) {
            }
        }
        return std::max(1u, std::thread::hardware_concurrency());
    }();
    return count;
}

}  // namespace qrelax
