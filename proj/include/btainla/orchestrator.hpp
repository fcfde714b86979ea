#pragma once

// Task scheduling and stage timing.
//
// WorkerPool runs submitted tasks on worker_count - 1 background threads plus
// whichever thread is waiting on a result: a waiter executes queued tasks
// until its own result is ready, so nested submissions (an objective batch
// whose evaluations each split into two subtasks) cannot deadlock.

#include <algorithm>
#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <deque>
#include <functional>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <type_traits>
#include <utility>
#include <vector>

namespace btainla {

struct StageStat {
  std::size_t count = 0;
  double seconds = 0.0;
};

/// Named duration accumulators. Not synchronized: each task owns its own
/// instance and instances are merged at join points.
class StageTimers {
 public:
  void add(const std::string& stage, double seconds, std::size_t count = 1) {
    auto& s = stats_[stage];
    s.count += count;
    s.seconds += std::max(0.0, seconds);
  }

  void merge(const StageTimers& other) {
    for (const auto& [name, s] : other.stats_) add(name, s.seconds, s.count);
  }

  double seconds(const std::string& stage) const {
    const auto it = stats_.find(stage);
    return it == stats_.end() ? 0.0 : it->second.seconds;
  }

  std::size_t count(const std::string& stage) const {
    const auto it = stats_.find(stage);
    return it == stats_.end() ? 0 : it->second.count;
  }

  double total_seconds() const {
    double t = 0.0;
    for (const auto& [name, s] : stats_) t += s.seconds;
    return t;
  }

  const std::map<std::string, StageStat>& stats() const noexcept { return stats_; }

 private:
  std::map<std::string, StageStat> stats_;
};

/// Stage names used by the inference pipeline's timing table.
namespace stage {
inline const std::string assembly = "assembly";
inline const std::string factorization_numerator = "factorization_numerator";
inline const std::string factorization_denominator = "factorization_denominator";
inline const std::string solve = "solve";
inline const std::string selected_inversion = "selected_inversion";
inline const std::string other = "other";
}  // namespace stage

/// Runs `work`, records its wall time under `name` and returns its result.
template <class Work>
auto timed_stage(StageTimers& timers, const std::string& name, Work&& work) {
  using Clock = std::chrono::steady_clock;
  const auto start = Clock::now();
  if constexpr (std::is_void_v<std::invoke_result_t<Work>>) {
    std::forward<Work>(work)();
    timers.add(name, std::chrono::duration<double>(Clock::now() - start).count());
  } else {
    auto result = std::forward<Work>(work)();
    timers.add(name, std::chrono::duration<double>(Clock::now() - start).count());
    return result;
  }
}

struct TaskPlan {
  std::size_t worker_count = 1;
  /// Evaluate the prior and conditional factorizations as separate subtasks.
  bool layer2_split = true;

  void validate() const {
    if (worker_count < 1) throw std::invalid_argument("TaskPlan: worker_count must be >= 1");
  }
};

/// min(hardware threads, 2 * dim + 1).
inline std::size_t default_worker_count(std::size_t dim) {
  const std::size_t hw = std::max<std::size_t>(1, std::thread::hardware_concurrency());
  return std::min(hw, 2 * dim + 1);
}

class WorkerPool {
 public:
  explicit WorkerPool(std::size_t worker_count) {
    if (worker_count < 1) throw std::invalid_argument("WorkerPool: worker_count must be >= 1");
    threads_.reserve(worker_count - 1);
    for (std::size_t i = 0; i + 1 < worker_count; ++i) {
      threads_.emplace_back([this] { worker_loop(); });
    }
  }

  WorkerPool(const WorkerPool&) = delete;
  WorkerPool& operator=(const WorkerPool&) = delete;

  ~WorkerPool() {
    {
      std::lock_guard lock(mutex_);
      stopping_ = true;
    }
    cv_.notify_all();
    for (auto& t : threads_) t.join();
  }

  std::size_t worker_count() const noexcept { return threads_.size() + 1; }

  template <class F>
  auto submit(F&& f) -> std::future<std::invoke_result_t<F>> {
    using R = std::invoke_result_t<F>;
    auto task = std::make_shared<std::packaged_task<R()>>(std::forward<F>(f));
    auto fut = task->get_future();
    {
      std::lock_guard lock(mutex_);
      queue_.emplace_back([task] { (*task)(); });
    }
    cv_.notify_one();
    return fut;
  }

  /// Waits for `fut`, running queued tasks in the meantime.
  template <class R>
  R wait(std::future<R>& fut) {
    wait_ready(fut);
    return fut.get();
  }

  /// Applies `f` to every element; output order matches input order.
  template <class T, class F>
  auto map(const std::vector<T>& items, F f)
      -> std::vector<std::invoke_result_t<F&, const T&>> {
    using R = std::invoke_result_t<F&, const T&>;
    std::vector<std::future<R>> futures;
    futures.reserve(items.size());
    for (const auto& item : items) {
      futures.push_back(submit([&f, &item] { return f(item); }));
    }
    // Every task references `f`, so all of them finish before any exception
    // is rethrown.
    for (auto& fut : futures) wait_ready(fut);
    std::vector<R> out;
    out.reserve(items.size());
    for (auto& fut : futures) out.push_back(fut.get());
    return out;
  }

 private:
  template <class R>
  void wait_ready(std::future<R>& fut) {
    while (fut.wait_for(std::chrono::seconds(0)) != std::future_status::ready) {
      if (!run_one()) fut.wait();
    }
  }

  bool run_one() {
    std::function<void()> job;
    {
      std::lock_guard lock(mutex_);
      if (queue_.empty()) return false;
      job = std::move(queue_.front());
      queue_.pop_front();
    }
    job();
    return true;
  }

  void worker_loop() {
    while (true) {
      std::function<void()> job;
      {
        std::unique_lock lock(mutex_);
        cv_.wait(lock, [this] { return stopping_ || !queue_.empty(); });
        if (queue_.empty()) return;
        job = std::move(queue_.front());
        queue_.pop_front();
      }
      job();
    }
  }

  std::mutex mutex_;
  std::condition_variable cv_;
  std::deque<std::function<void()>> queue_;
  std::vector<std::thread> threads_;
  bool stopping_ = false;
};

/// Owns the worker pool for one run together with the plan it was built from.
class Orchestrator {
 public:
  explicit Orchestrator(TaskPlan plan) : plan_((plan.validate(), plan)), pool_(plan.worker_count) {}

  const TaskPlan& plan() const noexcept { return plan_; }
  WorkerPool& pool() noexcept { return pool_; }

  /// Timers merged from all completed work.
  StageTimers& timers() noexcept { return timers_; }
  const StageTimers& timers() const noexcept { return timers_; }

 private:
  TaskPlan plan_;
  WorkerPool pool_;
  StageTimers timers_;
};

}  // namespace btainla
