#ifndef BNPDTR_VALUE_ENGINE_HPP
#define BNPDTR_VALUE_ENGINE_HPP

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <memory>
#include <mutex>
#include <span>
#include <stdexcept>
#include <thread>
#include <vector>

#include "bnpdtr/core/dynamics.hpp"
#include "bnpdtr/dpm/chain.hpp"
#include "bnpdtr/stats/random.hpp"

namespace bnpdtr {

// The distribution simulated subjects are drawn from: a single model, or a
// posterior chain where each subject gets its own uniformly chosen draw.
class ModelSource {
 public:
  ModelSource() = default;

  static ModelSource fixed(MixtureModel m) {
    ModelSource s;
    s.models_.push_back(std::make_shared<const PreparedModel>(std::move(m)));
    return s;
  }

  static ModelSource posterior(const dpm::PosteriorChain& chain) {
    if (chain.empty()) throw std::invalid_argument("ModelSource: empty posterior chain");
    ModelSource s;
    s.models_.reserve(chain.size());
    for (const MixtureModel& m : chain.draws) s.models_.push_back(std::make_shared<const PreparedModel>(m));
    return s;
  }

  // A source restricted to one draw of a posterior source.
  ModelSource draw(std::size_t k) const {
    ModelSource s;
    s.models_.push_back(models_.at(k));
    return s;
  }

  std::size_t size() const { return models_.size(); }
  bool empty() const { return models_.empty(); }
  const PreparedModel& model(std::size_t k) const { return *models_.at(k); }
  std::size_t p() const { return models_.front()->model().p(); }

  template <class ActionRule>
  void sample(Trajectory& out, ActionRule&& rule, double horizon, Rng& rng) const {
    if (models_.empty()) throw std::logic_error("ModelSource: no models");
    std::size_t k = 0;
    if (models_.size() > 1) k = std::uniform_int_distribution<std::size_t>(0, models_.size() - 1)(rng);
    sample_subject_into(out, *models_[k], rule, horizon, rng);
  }

 private:
  std::vector<std::shared_ptr<const PreparedModel>> models_;
};

inline constexpr std::size_t kSubjectsPerBlock = 1024;

inline unsigned resolve_threads(unsigned requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

// Runs fn(block) for block = 0..n_blocks-1 on up to `threads` workers. The
// first exception thrown by any block is rethrown.
template <class Fn>
void parallel_for_blocks(std::size_t n_blocks, unsigned threads, Fn&& fn) {
  threads = std::min<unsigned>(resolve_threads(threads), static_cast<unsigned>(std::max<std::size_t>(n_blocks, 1)));
  if (threads <= 1) {
    for (std::size_t b = 0; b < n_blocks; ++b) fn(b);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t b = next.fetch_add(1);
      if (b >= n_blocks) return;
      try {
        fn(b);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        next.store(n_blocks);
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

// Simulates n subjects in fixed-size blocks, each with its own RNG stream
// derived from (seed, block), so results do not depend on the thread count.
// visit(block, trajectory) is called once per subject.
template <class ActionRule, class Visit>
void simulate_blocks(const ModelSource& source, const ActionRule& rule, std::size_t n, double horizon,
                     std::uint64_t seed, unsigned threads, Visit&& visit) {
  const std::size_t n_blocks = (n + kSubjectsPerBlock - 1) / kSubjectsPerBlock;
  parallel_for_blocks(n_blocks, threads, [&](std::size_t b) {
    Rng rng = make_rng(seed, b);
    Trajectory tr;
    const std::size_t end = std::min(n, (b + 1) * kSubjectsPerBlock);
    for (std::size_t i = b * kSubjectsPerBlock; i < end; ++i) {
      source.sample(tr, rule, horizon, rng);
      visit(b, tr);
    }
  });
}

template <class ActionRule>
std::vector<Trajectory> simulate_cohort(const ModelSource& source, const ActionRule& rule, std::size_t n,
                                        double horizon, std::uint64_t seed, unsigned threads = 1) {
  const std::size_t n_blocks = (n + kSubjectsPerBlock - 1) / kSubjectsPerBlock;
  std::vector<std::vector<Trajectory>> parts(n_blocks);
  simulate_blocks(source, rule, n, horizon, seed, threads,
                  [&](std::size_t b, const Trajectory& tr) { parts[b].push_back(tr); });
  std::vector<Trajectory> out;
  out.reserve(n);
  for (auto& part : parts)
    for (auto& tr : part) out.push_back(std::move(tr));
  return out;
}

inline double mean_action(const Trajectory& tr) {
  if (tr.visits.empty()) throw std::domain_error("mean_action: no follow-up visits");
  double s = 0.0;
  for (const VisitRecord& v : tr.visits) s += v.A;
  return s / static_cast<double>(tr.visits.size());
}

// Per-subject mean recommended interval averaged over n simulated subjects.
template <class ActionRule>
double estimate_cost(const ModelSource& source, const ActionRule& rule, std::size_t n, double horizon,
                     std::uint64_t seed, unsigned threads = 1) {
  if (n == 0) throw std::invalid_argument("estimate_cost: n must be positive");
  const std::size_t n_blocks = (n + kSubjectsPerBlock - 1) / kSubjectsPerBlock;
  std::vector<double> sums(n_blocks, 0.0);
  simulate_blocks(source, rule, n, horizon, seed, threads,
                  [&](std::size_t b, const Trajectory& tr) { sums[b] += mean_action(tr); });
  double total = 0.0;
  for (double s : sums) total += s;
  return total / static_cast<double>(n);
}

}  // namespace bnpdtr

#endif
