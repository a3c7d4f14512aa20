#include "recbound/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <map>
#include <random>
#include <set>
#include <sstream>

#ifdef RECBOUND_HAVE_OPENMP
#include <omp.h>
#endif

namespace recbound {

const char* eval_status_name(EvalStatus::Kind k) {
  switch (k) {
    case EvalStatus::Value: return "value";
    case EvalStatus::Diverged: return "diverged";
    case EvalStatus::Cycle: return "cycle";
    case EvalStatus::Undefined: return "undefined";
    case EvalStatus::Overflow: return "overflow";
  }
  return "?";
}

std::string MemoTable::key(const Point& p) {
  std::string k(p.size() * sizeof(std::int64_t), '\0');
  std::memcpy(k.data(), p.data(), k.size());
  return k;
}

std::optional<Rational> MemoTable::lookup(const Point& p) const {
  std::string k = key(p);
  const Shard& s = shards_[std::hash<std::string>{}(k) % kShards];
  std::lock_guard<std::mutex> lock(s.mu);
  auto it = s.map.find(k);
  if (it == s.map.end()) return std::nullopt;
  return it->second;
}

void MemoTable::store(const Point& p, Rational v) {
  std::string k = key(p);
  Shard& s = shards_[std::hash<std::string>{}(k) % kShards];
  std::lock_guard<std::mutex> lock(s.mu);
  s.map.emplace(std::move(k), std::move(v));
}

std::size_t MemoTable::size() const {
  std::size_t n = 0;
  for (const auto& s : shards_) {
    std::lock_guard<std::mutex> lock(s.mu);
    n += s.map.size();
  }
  return n;
}

Evaluator::Evaluator(const Recurrence& r, EvalParams params) : rec_(r), params_(params) {}

namespace {

struct PendingCall {
  Point target;
};

}  // namespace

EvalStatus Evaluator::evaluate(const Point& p) {
  if (static_cast<int>(p.size()) != rec_.arity())
    return {EvalStatus::Undefined, {}, {}, "arity mismatch"};
  if (!rec_.in_domain(p)) return {EvalStatus::Undefined, {}, {}, "point outside the domain"};

  // Explicit chain stack: every entry is an ancestor of the one above it.
  std::vector<Point> chain;
  std::set<Point> open;
  chain.push_back(p);
  open.insert(p);
  std::size_t budget = params_.node_budget;
  bool overflow = false;
  std::string overflow_detail;

  while (!chain.empty()) {
    if (budget-- == 0)
      return {EvalStatus::Diverged, {}, {}, "evaluation budget exhausted"};
    Point cur = chain.back();
    if (memo_.lookup(cur)) {
      open.erase(cur);
      chain.pop_back();
      continue;
    }
    if (!rec_.in_domain(cur))
      return {EvalStatus::Undefined, {}, {},
              "recursive call left the domain"};
    int ci = rec_.case_at(cur);
    if (ci < 0)
      return {EvalStatus::Undefined, {}, {}, "no case covers a reached point"};

    std::optional<Point> missing;
    bool cycle = false;
    CallOracle lookup = [&](const Point& t) -> std::optional<Rational> {
      auto v = memo_.lookup(t);
      if (v) return v;
      if (!missing) {
        missing = t;
        if (open.count(t)) cycle = true;
      }
      return std::nullopt;
    };
    EvalResult res = eval_expr(rec_.cases[ci].body, cur, lookup);
    if (res.ok()) {
      if (rational_bits(*res.value) > params_.value_bits_cap) {
        overflow = true;
        overflow_detail = "value exceeded " + std::to_string(params_.value_bits_cap) + " bits";
        break;
      }
      memo_.store(cur, std::move(*res.value));
      open.erase(cur);
      chain.pop_back();
      continue;
    }
    if (res.error == EvalErrorKind::DomainError)
      return {EvalStatus::Undefined, {}, {}, res.detail};
    if (!missing)
      return {EvalStatus::Undefined, {}, {}, "oracle-undefined without a missing point"};
    if (cycle) {
      // witness: the chain from the first occurrence of *missing to the top
      std::vector<Point> witness;
      auto it = std::find(chain.begin(), chain.end(), *missing);
      for (; it != chain.end(); ++it) witness.push_back(*it);
      witness.push_back(*missing);
      return {EvalStatus::Cycle, {}, std::move(witness), "point recurs on the active chain"};
    }
    if (!rec_.in_domain(*missing))
      return {EvalStatus::Undefined, {}, {}, "recursive call left the domain"};
    open.insert(*missing);
    chain.push_back(std::move(*missing));
  }
  if (overflow) return {EvalStatus::Overflow, {}, {}, overflow_detail};
  auto v = memo_.lookup(p);
  if (!v) return {EvalStatus::Undefined, {}, {}, "internal: value missing after evaluation"};
  return EvalStatus::of(std::move(*v));
}

CallOracle Evaluator::oracle() {
  return [this](const Point& t) -> std::optional<Rational> {
    EvalStatus s = evaluate(t);
    if (!s.ok()) return std::nullopt;
    return s.value;
  };
}

// ---------------------------------------------------------------------------

std::optional<Rational> kleene_reference(const Recurrence& r, const Point& point,
                                         std::size_t iterations, const EvalParams& params) {
  if (!r.in_domain(point)) return std::nullopt;
  std::map<Point, Rational> prev;
  std::set<Point> active{point};
  for (std::size_t it = 0; it < iterations; ++it) {
    std::map<Point, Rational> next;
    std::set<Point> grow = active;
    for (const Point& q : active) {
      if (!r.in_domain(q)) continue;
      int ci = r.case_at(q);
      if (ci < 0) continue;
      CallOracle orc = [&](const Point& t) -> std::optional<Rational> {
        grow.insert(t);
        auto f = prev.find(t);
        if (f == prev.end()) return std::nullopt;
        return f->second;
      };
      EvalResult res = eval_expr(r.cases[ci].body, q, orc);
      if (res.ok()) {
        if (rational_bits(*res.value) > params.value_bits_cap) return std::nullopt;
        next.emplace(q, std::move(*res.value));
      }
    }
    if (next == prev) break;  // fixpoint on the explored set
    prev = std::move(next);
    active = std::move(grow);
    if (active.size() > 2000000) return std::nullopt;
  }
  auto f = prev.find(point);
  if (f == prev.end()) return std::nullopt;
  return f->second;
}

TerminationReport check_termination_on_sample(const Recurrence& r, const std::vector<Point>& sample,
                                              EvalParams params) {
  Evaluator ev(r, params);
  TerminationReport rep;
  for (const Point& p : sample) {
    ++rep.checked;
    EvalStatus s = ev.evaluate(p);
    if (s.ok())
      ++rep.terminating;
    else
      rep.bottom_points.emplace_back(p, s.kind);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Sample generation
// ---------------------------------------------------------------------------

std::int64_t hypercube_side_for(std::size_t nb, int dim) {
  double side = std::pow(static_cast<double>(nb), 1.0 / dim);
  std::int64_t bb = static_cast<std::int64_t>(std::llround(side)) - 1;
  return std::max<std::int64_t>(bb, 1);
}

namespace {

TrainingSet generate_once(const Recurrence& r, std::int64_t bb, std::int64_t brs, std::size_t nrs,
                          const SampleParams& sp, const EvalParams& ep, bool& overflowed) {
  TrainingSet ts;
  ts.bb = bb;
  ts.brs = brs;
  ts.nb = sp.nb;
  ts.nrs = nrs;
  ts.seed = sp.seed;
  const int d = r.arity();

  std::set<Point> pts;
  // hypercube [0, bb]^d
  Point p(d, 0);
  bool done = false;
  while (!done) {
    pts.insert(p);
    int v = 0;
    while (v < d) {
      if (++p[v] <= bb) break;
      p[v] = 0;
      ++v;
    }
    done = v == d;
  }
  // random sample of [0, brs]^d
  std::mt19937_64 rng(sp.seed ^ 0x9e3779b97f4a7c15ull);
  std::uniform_int_distribution<std::int64_t> dist(0, brs);
  for (std::size_t i = 0; i < nrs; ++i) {
    Point q(d);
    for (int v = 0; v < d; ++v) q[v] = dist(rng);
    pts.insert(q);
  }
  std::vector<Point> filtered;
  filtered.reserve(pts.size());
  for (const auto& q : pts)
    if (r.in_domain(q)) filtered.push_back(q);

  Evaluator ev(r, ep);
  std::vector<std::optional<Rational>> values(filtered.size());
  std::vector<EvalStatus::Kind> kinds(filtered.size(), EvalStatus::Undefined);
  std::atomic<bool> saw_overflow{false};

#ifdef RECBOUND_HAVE_OPENMP
  if (sp.parallel) {
#pragma omp parallel for schedule(dynamic, 64)
    for (std::size_t i = 0; i < filtered.size(); ++i) {
      if (saw_overflow.load(std::memory_order_relaxed)) continue;
      EvalStatus s = ev.evaluate(filtered[i]);
      kinds[i] = s.kind;
      if (s.ok()) values[i] = std::move(s.value);
      if (s.kind == EvalStatus::Overflow) saw_overflow.store(true, std::memory_order_relaxed);
    }
  } else
#endif
  {
    for (std::size_t i = 0; i < filtered.size(); ++i) {
      EvalStatus s = ev.evaluate(filtered[i]);
      kinds[i] = s.kind;
      if (s.ok()) values[i] = std::move(s.value);
      if (s.kind == EvalStatus::Overflow) {
        saw_overflow.store(true);
        break;
      }
    }
  }
  if (saw_overflow.load()) {
    overflowed = true;
    return ts;
  }
  for (std::size_t i = 0; i < filtered.size(); ++i) {
    if (values[i]) {
      ts.points.push_back(filtered[i]);
      ts.values.push_back(std::move(*values[i]));
    } else {
      ts.excluded.emplace_back(filtered[i], kinds[i]);
    }
  }
  overflowed = false;
  return ts;
}

}  // namespace

TrainingSet generate_sample(const Recurrence& r, const SampleParams& sp, EvalParams ep) {
  std::int64_t bb = sp.bb >= 0 ? sp.bb : hypercube_side_for(sp.nb, r.arity());
  bool overflowed = false;
  TrainingSet ts = generate_once(r, bb, sp.brs, sp.nrs, sp, ep, overflowed);
  if (overflowed) {
    TrainingSet retry = generate_once(r, sp.retry_bound, sp.retry_bound, sp.nrs, sp, ep, overflowed);
    retry.retried_small = true;
    if (overflowed)
      throw std::runtime_error("sample generation overflowed even with small inputs");
    return retry;
  }
  return ts;
}

std::string TrainingSet::to_csv(const std::vector<std::string>& vars) const {
  std::ostringstream os;
  for (std::size_t v = 0; v < vars.size(); ++v) os << (v ? "," : "") << vars[v];
  os << ",value\n";
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (std::size_t v = 0; v < points[i].size(); ++v) os << (v ? "," : "") << points[i][v];
    os << "," << recbound::to_string(values[i]) << "\n";
  }
  return os.str();
}

}  // namespace recbound
