#pragma once

#include <cstddef>
#include <memory>
#include <mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "recbound/recurrence.hpp"

namespace recbound {

struct EvalParams {
  std::size_t node_budget = 10000000;  // expanded evaluation frames
  std::size_t value_bits_cap = 4096;   // "overflow" under exact rationals
};

struct EvalStatus {
  enum Kind { Value, Diverged, Cycle, Undefined, Overflow } kind = Undefined;
  Rational value;
  std::vector<Point> cycle_witness;  // reproducible call chain for Cycle
  std::string detail;

  bool ok() const { return kind == Value; }
  static EvalStatus of(Rational v) { return {Value, std::move(v), {}, {}}; }
};

const char* eval_status_name(EvalStatus::Kind k);

// Shared memo table; sharded for concurrent insert-if-absent.
class MemoTable {
 public:
  std::optional<Rational> lookup(const Point& p) const;
  void store(const Point& p, Rational v);
  std::size_t size() const;

 private:
  static constexpr std::size_t kShards = 64;
  struct Shard {
    mutable std::mutex mu;
    std::unordered_map<std::string, Rational> map;
  };
  static std::string key(const Point& p);
  mutable Shard shards_[kShards];
};

class Evaluator {
 public:
  explicit Evaluator(const Recurrence& r, EvalParams params = {});

  // Memoized evaluation with an explicit work stack.
  EvalStatus evaluate(const Point& p);

  // Oracle view for eval_expr and friends (undefined outside the solved set
  // triggers a full evaluation).
  CallOracle oracle();

  const Recurrence& recurrence() const { return rec_; }
  const EvalParams& params() const { return params_; }
  MemoTable& memo() { return memo_; }

 private:
  const Recurrence rec_;
  EvalParams params_;
  MemoTable memo_;
};

// Independent bottom-up oracle: iterate Phi on the everywhere-undefined
// function over the call closure of `point`. Used in tests as the brute
// force reference for `evaluate`.
std::optional<Rational> kleene_reference(const Recurrence& r, const Point& point,
                                         std::size_t iterations,
                                         const EvalParams& params = {});

struct TerminationReport {
  std::size_t checked = 0;
  std::size_t terminating = 0;
  std::vector<std::pair<Point, EvalStatus::Kind>> bottom_points;  // non-terminating
  bool all_terminating() const { return bottom_points.empty(); }
};

TerminationReport check_termination_on_sample(const Recurrence& r, const std::vector<Point>& sample,
                                              EvalParams params = {});

// ---------------------------------------------------------------------------
// Training sets
// ---------------------------------------------------------------------------

struct SampleParams {
  std::int64_t bb = -1;     // hypercube side bound; -1 = derive from nb
  std::size_t nb = 50000;   // target hypercube cardinality
  std::int64_t brs = 2000;  // random-sample box bound
  std::size_t nrs = 20000;  // random-sample size
  std::uint64_t seed = 0;
  std::int64_t retry_bound = 15;  // Bb = Brs = 15 on overflow
  bool parallel = true;
};

struct TrainingSet {
  std::vector<Point> points;
  std::vector<Rational> values;
  // generation metadata
  std::int64_t bb = 0;
  std::int64_t brs = 0;
  std::size_t nb = 0, nrs = 0;
  std::uint64_t seed = 0;
  bool retried_small = false;
  std::vector<std::pair<Point, EvalStatus::Kind>> excluded;  // failures

  std::size_t size() const { return points.size(); }
  std::string to_csv(const std::vector<std::string>& vars) const;
};

// Hypercube [0,Bb]^d plus Nrs random points of [0,Brs]^d, filtered to the
// domain, deduplicated, evaluated exactly; deterministic given the seed.
// Value-size overflow anywhere triggers one retry with Bb = Brs = retry_bound.
TrainingSet generate_sample(const Recurrence& r, const SampleParams& sp, EvalParams ep = {});

std::int64_t hypercube_side_for(std::size_t nb, int dim);

}  // namespace recbound
