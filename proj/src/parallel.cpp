#include "sharpnerf/parallel.hpp"

#include <atomic>
#include <condition_variable>
#include <cstdlib>
#include <mutex>
#include <thread>
#include <vector>

namespace sharpnerf {

namespace {

std::size_t detect_threads() {
  if (const char* env = std::getenv("SHARPNERF_THREADS")) {
    long n = std::atol(env);
    if (n >= 1) return static_cast<std::size_t>(n);
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

// Minimal persistent pool: N-1 workers plus the calling thread.
class Pool {
 public:
  Pool() : workers_(thread_count() > 0 ? thread_count() - 1 : 0) {
    for (std::size_t i = 0; i < workers_.size(); ++i) {
      workers_[i] = std::thread([this, i] { worker_loop(i + 1); });
    }
  }

  ~Pool() {
    {
      std::lock_guard<std::mutex> lk(mu_);
      stop_ = true;
    }
    cv_.notify_all();
    for (auto& t : workers_) t.join();
  }

  void run(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn) {
    const std::size_t slots = workers_.size() + 1;
    if (slots == 1 || n < 2 * slots) {
      fn(0, n);
      return;
    }
    {
      std::lock_guard<std::mutex> lk(mu_);
      job_ = &fn;
      job_n_ = n;
      job_slots_ = slots;
      pending_ = slots - 1;
      ++generation_;
    }
    cv_.notify_all();
    run_slot(0);
    std::unique_lock<std::mutex> lk(mu_);
    done_cv_.wait(lk, [this] { return pending_ == 0; });
    job_ = nullptr;
  }

 private:
  void run_slot(std::size_t slot) {
    const std::size_t chunk = (job_n_ + job_slots_ - 1) / job_slots_;
    const std::size_t begin = slot * chunk;
    const std::size_t end = std::min(job_n_, begin + chunk);
    if (begin < end) (*job_)(begin, end);
  }

  void worker_loop(std::size_t slot) {
    std::uint64_t seen = 0;
    for (;;) {
      std::unique_lock<std::mutex> lk(mu_);
      cv_.wait(lk, [&] { return stop_ || generation_ != seen; });
      if (stop_) return;
      seen = generation_;
      lk.unlock();
      if (slot < job_slots_) run_slot(slot);
      lk.lock();
      if (--pending_ == 0) done_cv_.notify_one();
    }
  }

  std::vector<std::thread> workers_;
  std::mutex mu_;
  std::condition_variable cv_;
  std::condition_variable done_cv_;
  const std::function<void(std::size_t, std::size_t)>* job_ = nullptr;
  std::size_t job_n_ = 0;
  std::size_t job_slots_ = 0;
  std::size_t pending_ = 0;
  std::uint64_t generation_ = 0;
  bool stop_ = false;
};

}  // namespace

std::size_t thread_count() {
  static const std::size_t n = detect_threads();
  return n;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn) {
  if (n == 0) return;
  static Pool pool;
  pool.run(n, fn);
}

}  // namespace sharpnerf
