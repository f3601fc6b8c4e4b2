#include "recast/parallel.h"

#include <condition_variable>
#include <cstdlib>
#include <mutex>
#include <thread>
#include <vector>

namespace recast {
namespace {

thread_local bool g_in_worker = false;

class Pool {
public:
    static Pool& instance() {
        static Pool pool(thread_count());
        return pool;
    }

    explicit Pool(int n_threads) : n_(n_threads) {
        for (int i = 1; i < n_; ++i) {
            workers_.emplace_back([this, i] { worker_loop(i); });
        }
    }

    ~Pool() {
        {
            std::unique_lock lk(mu_);
            stop_ = true;
        }
        cv_.notify_all();
        for (auto& t : workers_) t.join();
    }

    int size() const { return n_; }

    void run(const std::function<void(int)>& job) {
        if (n_ == 1) {
            job(0);
            return;
        }
        {
            std::unique_lock lk(mu_);
            job_ = &job;
            pending_ = n_ - 1;
            ++epoch_;
        }
        cv_.notify_all();
        job(0);
        std::unique_lock lk(mu_);
        done_cv_.wait(lk, [this] { return pending_ == 0; });
        job_ = nullptr;
    }

private:
    void worker_loop(int idx) {
        g_in_worker = true;
        uint64_t seen = 0;
        while (true) {
            const std::function<void(int)>* job = nullptr;
            {
                std::unique_lock lk(mu_);
                cv_.wait(lk, [&] { return stop_ || epoch_ != seen; });
                if (stop_) return;
                seen = epoch_;
                job = job_;
            }
            (*job)(idx);
            {
                std::unique_lock lk(mu_);
                if (--pending_ == 0) done_cv_.notify_all();
            }
        }
    }

    int n_;
    std::vector<std::thread> workers_;
    std::mutex mu_;
    std::condition_variable cv_;
    std::condition_variable done_cv_;
    const std::function<void(int)>* job_ = nullptr;
    int pending_ = 0;
    uint64_t epoch_ = 0;
    bool stop_ = false;
};

}  // namespace

int thread_count() {
    static int n = [] {
        if (const char* env = std::getenv("RECAST_THREADS")) {
            int v = std::atoi(env);
            if (v >= 1) return v;
        }
        unsigned hw = std::thread::hardware_concurrency();
        return hw == 0 ? 1 : static_cast<int>(hw);
    }();
    return n;
}

void parallel_for(int64_t n, const std::function<void(int64_t, int64_t)>& fn) {
    if (n <= 0) return;
    Pool& pool = Pool::instance();
    int workers = pool.size();
    if (g_in_worker || workers == 1 || n == 1) {
        fn(0, n);
        return;
    }
    int64_t chunk = (n + workers - 1) / workers;
    pool.run([&](int idx) {
        int64_t begin = idx * chunk;
        int64_t end = std::min<int64_t>(n, begin + chunk);
        if (begin < end) fn(begin, end);
    });
}

}  // namespace recast
