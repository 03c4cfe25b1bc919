#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace rml {

// Resolves a worker count: explicit value if positive, else RML_WORKERS, else
// the hardware concurrency.
int resolve_workers(int requested);

class TrialError : public std::runtime_error {
public:
    TrialError(std::size_t trial, const std::string& what)
        : std::runtime_error("trial " + std::to_string(trial) + ": " + what), trial_(trial)
    {
    }
    std::size_t trial() const { return trial_; }

private:
    std::size_t trial_;
};

// Evaluates f(i) for i in [0, trials) on `workers` threads and returns the
// results in index order.  Each f(i) must depend only on i, so the output is
// the same for any worker count.  The first failing trial (lowest index among
// those that ran) is rethrown as TrialError after all threads stop.
template <class R, class F>
std::vector<R> run_trials(std::size_t trials, int workers, F&& f)
{
    std::vector<R> out(trials);
    if (trials == 0) return out;
    const std::size_t nw = std::max<std::size_t>(1, std::min<std::size_t>(std::size_t(std::max(workers, 1)), trials));
    const std::size_t chunk = std::max<std::size_t>(1, std::min<std::size_t>(256, trials / (nw * 8) + 1));
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::mutex mu;
    std::size_t bad_trial = trials;
    std::string bad_what;
    auto body = [&] {
        while (!failed.load(std::memory_order_relaxed)) {
            const std::size_t begin = next.fetch_add(chunk);
            if (begin >= trials) break;
            const std::size_t end = std::min(trials, begin + chunk);
            for (std::size_t i = begin; i < end; ++i) {
                try {
                    out[i] = f(i);
                } catch (const std::exception& e) {
                    std::lock_guard<std::mutex> lock(mu);
                    if (i < bad_trial) {
                        bad_trial = i;
                        bad_what = e.what();
                    }
                    failed.store(true);
                    break;
                }
            }
        }
    };
    if (nw == 1) {
        body();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(nw);
        for (std::size_t w = 0; w < nw; ++w) pool.emplace_back(body);
        for (auto& t : pool) t.join();
    }
    if (failed) throw TrialError(bad_trial, bad_what);
    return out;
}

}  // namespace rml
