#ifndef FLOQPATCH_COMMON_HPP
#define FLOQPATCH_COMMON_HPP

#include <atomic>
#include <cstdlib>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace floq {

enum class ErrorCode {
    invalid_argument,
    parse,
    domain,       // RHS/expression evaluated outside its domain
    numerical,    // integration failure, Newton divergence, singular matrix
    no_cycle,
    io,
};

struct Error : std::runtime_error {
    ErrorCode code;
    Error(ErrorCode c, const std::string& msg) : std::runtime_error(msg), code(c) {}
};

[[noreturn]] inline void fail(ErrorCode c, const std::string& msg) { throw Error(c, msg); }

// Concurrency cap: FLOQUET_PATCH_THREADS, else hardware_concurrency.
inline unsigned max_threads()
{
    if (const char* s = std::getenv("FLOQUET_PATCH_THREADS")) {
        long n = std::strtol(s, nullptr, 10);
        if (n >= 1) return static_cast<unsigned>(n);
    }
    unsigned hc = std::thread::hardware_concurrency();
    return hc ? hc : 1;
}

// Run fn(i) for i in [0, count). Exceptions are collected and the first rethrown.
inline void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn)
{
    unsigned nw = std::min<std::size_t>(max_threads(), count);
    if (nw <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::vector<std::thread> workers;
    std::vector<std::exception_ptr> errs(count);
    std::atomic<std::size_t> next{0};
    for (unsigned w = 0; w < nw; ++w) {
        workers.emplace_back([&] {
            for (;;) {
                std::size_t i = next.fetch_add(1);
                if (i >= count) break;
                try {
                    fn(i);
                } catch (...) {
                    errs[i] = std::current_exception();
                }
            }
        });
    }
    for (auto& t : workers) t.join();
    for (auto& e : errs)
        if (e) std::rethrow_exception(e);
}

} // namespace floq

#endif
