#include "heisvisc/parallel.hpp"

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace heisvisc {

unsigned worker_count() {
    unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("HEISVISC_THREADS")) {
        try {
            const long cap = std::stol(env);
            if (cap > 0) hw = std::min<unsigned>(hw, static_cast<unsigned>(cap));
        } catch (const std::exception&) {
            // malformed value: ignore the cap
        }
    }
    return hw;
}

void parallel_for(std::size_t count, const std::function<void(std::size_t, std::size_t)>& body) {
    if (count == 0) return;
    const std::size_t workers = std::min<std::size_t>(worker_count(), count);
    if (workers <= 1 || count < 64) {
        body(0, count);
        return;
    }
    const std::size_t chunk = (count + workers - 1) / workers;
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t b = w * chunk;
        const std::size_t e = std::min(count, b + chunk);
        if (b >= e) break;
        pool.emplace_back([&, w, b, e] {
            try {
                body(b, e);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& err : errors)
        if (err) std::rethrow_exception(err);
}

}  // namespace heisvisc
