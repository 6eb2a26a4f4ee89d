#include "ksplit/splitting.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>

namespace ksplit {

namespace {

// D* over sorted doubles, used for the per-stage summary column.
double dstar_double(const std::vector<double>& xs) {
  if (xs.empty()) return std::numeric_limits<double>::quiet_NaN();
  const double n = static_cast<double>(xs.size());
  double best = 0;
  for (size_t i = 0; i < xs.size(); ++i) {
    double hi = std::fabs((static_cast<double>(i) + 1) / n - xs[i]);
    double lo = std::fabs(xs[i] - static_cast<double>(i) / n);
    best = std::max(best, std::max(hi, lo));
  }
  return best;
}

// Engine templated on the interval key type. K = Rat runs the exact procedure;
// K = Real runs the float procedure (conjugated systems track the affine
// preimage in K and weigh buckets by the conjugated length).
template <class K>
struct Engine {
  struct Node {
    K a, b;  // affine preimage (equals the actual interval unless conjugated)
    Word w;
  };

  const BranchSystem& sys;
  const bool conj;
  std::multimap<K, Node, std::greater<K>> buckets;  // keyed by actual length
  std::map<K, std::pair<int, bool>> points;         // actual endpoint -> (first stage, in_L)
  std::vector<Word> split_words;
  std::vector<StageSummary> stages;
  long long total_intervals = 1;
  long long left_count = 0;

  explicit Engine(const BranchSystem& s) : sys(s), conj(s.kind() == SystemKind::Conjugated) {}

  K actual(const K& pre) const;
  K child_lo(int i, const Node& n) const;
  K child_hi(int i, const Node& n) const;

  // Locates an existing record for p. Exact match for rationals; float mode
  // dedups with an absolute 1e-14 tolerance.
  typename std::map<K, std::pair<int, bool>>::iterator locate(const K& p) {
    if constexpr (std::is_same_v<K, Rat>) {
      return points.find(p);
    } else {
      static const Real tol = Real("1e-14");
      auto it = points.lower_bound(p - tol);
      typename std::map<K, std::pair<int, bool>>::iterator best = points.end();
      K gap = tol;
      for (; it != points.end() && it->first <= p + tol; ++it) {
        K d = abs(it->first - p);
        if (d <= gap) {
          gap = d;
          best = it;
        }
      }
      return best;
    }
  }

  void insert_point(const K& p, int stage, bool left) {
    auto it = locate(p);
    if (it == points.end())
      points.emplace(p, std::make_pair(stage, left));
    else if (left)
      it->second.second = true;
  }

  void insert_node(Node n, int stage) {
    K len = actual(n.b) - actual(n.a);
    insert_point(actual(n.a), stage, false);
    insert_point(actual(n.b), stage, false);
    buckets.emplace(std::move(len), std::move(n));
  }

  bool tie(const K& key, const K& kmax) const;

  void run(const SplitStop& stop, const SplitOptions& opts) {
    insert_node({K(0), K(1), Word{}}, 0);
    int stage = 0;
    while (true) {
      if (stop.stages && stage >= *stop.stages) break;
      if (stop.min_left && left_count >= *stop.min_left) break;
      if (buckets.empty()) break;
      ++stage;

      K kmax = buckets.begin()->first;
      std::vector<Node> group;
      while (!buckets.empty() && tie(buckets.begin()->first, kmax)) {
        group.push_back(std::move(buckets.begin()->second));
        buckets.erase(buckets.begin());
      }

      for (auto& n : group) {
        K la = actual(n.a);
        auto it = locate(la);
        if (it == points.end()) {
          points.emplace(la, std::make_pair(stage, true));
          ++left_count;
        } else if (!it->second.second) {
          it->second.second = true;
          ++left_count;
        }
        split_words.push_back(n.w);
        total_intervals += sys.size() - 1;
        if (total_intervals > opts.max_intervals)
          fail(Errc::BudgetExceeded, "interval budget exceeded at stage " + std::to_string(stage));
        for (int i = 1; i <= sys.size(); ++i)
          insert_node({child_lo(i, n), child_hi(i, n), n.w.appended(i)}, stage);
      }

      StageSummary sm;
      sm.stage = stage;
      sm.max_length = Real(kmax);
      if constexpr (std::is_same_v<K, Rat>) sm.max_length_q = kmax;
      sm.intervals_split = static_cast<long long>(group.size());
      sm.endpoint_count = static_cast<long long>(points.size());
      sm.left_count = left_count;
      if (opts.stage_discrepancy) {
        std::vector<double> ls;
        for (const auto& [p, info] : points)
          if (info.second) ls.push_back(to_double(Real(p)));
        sm.dstar_left = dstar_double(ls);
      } else {
        sm.dstar_left = std::numeric_limits<double>::quiet_NaN();
      }
      stages.push_back(std::move(sm));
    }
  }
};

template <>
Rat Engine<Rat>::actual(const Rat& pre) const { return pre; }

template <>
Real Engine<Real>::actual(const Real& pre) const {
  return conj ? sys.conjugacy().g(pre) : pre;
}

template <>
Rat Engine<Rat>::child_lo(int i, const Node& n) const {
  return n.a + (n.b - n.a) * sys.offset_q(i);
}
template <>
Rat Engine<Rat>::child_hi(int i, const Node& n) const {
  return n.a + (n.b - n.a) * (sys.offset_q(i) + sys.ratio_q(i));
}
template <>
Real Engine<Real>::child_lo(int i, const Node& n) const {
  if (sys.has_affine_model()) return n.a + (n.b - n.a) * sys.offset(i);
  return map_word(sys, n.w.appended(i)).left;
}
template <>
Real Engine<Real>::child_hi(int i, const Node& n) const {
  if (sys.has_affine_model()) return n.a + (n.b - n.a) * (sys.offset(i) + sys.ratio(i));
  return map_word(sys, n.w.appended(i)).right;
}

template <>
bool Engine<Rat>::tie(const Rat& key, const Rat& kmax) const { return key == kmax; }
template <>
bool Engine<Real>::tie(const Real& key, const Real& kmax) const {
  static const Real rel = Real("1e-12");
  return key >= kmax * (1 - rel);
}

template <class K>
SplitResult collect(Engine<K>& eng) {
  SplitResult out;
  // ledger endpoints (points map is ordered by position)
  for (const auto& [p, info] : eng.points) {
    EndpointRecord r;
    r.value = Real(p);
    if constexpr (std::is_same_v<K, Rat>) r.value_q = p;
    r.first_stage = info.first;
    r.in_left = info.second;
    out.ledger.endpoints.push_back(std::move(r));
  }
  out.ledger.split_words = std::move(eng.split_words);
  out.ledger.stages = std::move(eng.stages);
  // remaining partition
  out.partition.stage = eng.stages.empty() ? 0 : eng.stages.back().stage;
  std::vector<CylinderRecord> ivs;
  for (const auto& [len, node] : eng.buckets) {
    (void)len;
    CylinderRecord rec;
    rec.word = node.w;
    rec.left = eng.actual(node.a);
    rec.right = eng.actual(node.b);
    if constexpr (std::is_same_v<K, Rat>) {
      rec.left_q = node.a;
      rec.right_q = node.b;
      rec.alpha_q = node.b - node.a;
    }
    rec.alpha = rec.right - rec.left;
    rec.chord = rec.alpha;
    ivs.push_back(std::move(rec));
  }
  std::sort(ivs.begin(), ivs.end(),
            [](const CylinderRecord& x, const CylinderRecord& y) { return x.left < y.left; });
  out.partition.intervals = std::move(ivs);
  out.partition.stage = out.ledger.stages.empty() ? 0 : out.ledger.stages.back().stage;
  return out;
}

}  // namespace

SplitResult run_splitting(const BranchSystem& sys, const SplitStop& stop, const SplitOptions& opts) {
  if (!stop.stages && !stop.min_left)
    fail(Errc::ConfigInvalid, "splitting needs a stage count or a left-endpoint target");
  if ((stop.stages && *stop.stages < 0) || (stop.min_left && *stop.min_left < 1))
    fail(Errc::ConfigInvalid, "splitting stop must be positive");
  if (sys.exact()) {
    Engine<Rat> eng(sys);
    eng.run(stop, opts);
    return collect(eng);
  }
  Engine<Real> eng(sys);
  eng.run(stop, opts);
  return collect(eng);
}

std::vector<Real> SplitLedger::left_points() const {
  std::vector<Real> out;
  for (const auto& e : endpoints)
    if (e.in_left) out.push_back(e.value);
  return out;
}

std::vector<Rat> SplitLedger::left_points_q() const {
  std::vector<Rat> out;
  for (const auto& e : endpoints)
    if (e.in_left && e.value_q) out.push_back(*e.value_q);
  return out;
}

std::vector<Real> SplitLedger::all_points() const {
  std::vector<Real> out;
  for (const auto& e : endpoints) out.push_back(e.value);
  return out;
}

std::vector<Rat> SplitLedger::all_points_q() const {
  std::vector<Rat> out;
  for (const auto& e : endpoints)
    if (e.value_q) out.push_back(*e.value_q);
  return out;
}

long long SplitLedger::left_count() const {
  long long n = 0;
  for (const auto& e : endpoints) n += e.in_left ? 1 : 0;
  return n;
}

Rat empirical_measure_exact(const SplitLedger& ledger, MeasureSet which, const Rat& lo, const Rat& hi) {
  long long total = 0, inside = 0;
  for (const auto& e : ledger.endpoints) {
    if (which == MeasureSet::Left && !e.in_left) continue;
    if (!e.value_q) fail(Errc::ConfigInvalid, "ledger has no exact values");
    ++total;
    if (*e.value_q >= lo && *e.value_q <= hi) ++inside;
  }
  if (total == 0) fail(Errc::EmptyLedger, "no points in ledger");
  return Rat(inside, total);
}

Real empirical_measure(const SplitLedger& ledger, MeasureSet which, const Real& lo, const Real& hi) {
  long long total = 0, inside = 0;
  for (const auto& e : ledger.endpoints) {
    if (which == MeasureSet::Left && !e.in_left) continue;
    ++total;
    if (e.value >= lo && e.value <= hi) ++inside;
  }
  if (total == 0) fail(Errc::EmptyLedger, "no points in ledger");
  return Real(inside) / total;
}

Rat star_discrepancy_exact(std::vector<Rat> points) {
  if (points.empty()) fail(Errc::EmptyInput, "star discrepancy of an empty set");
  std::sort(points.begin(), points.end());
  const Rat n = static_cast<long>(points.size());
  Rat best = 0;
  for (size_t i = 0; i < points.size(); ++i) {
    Rat up = abs(Rat(static_cast<long>(i) + 1) / n - points[i]);
    Rat dn = abs(points[i] - Rat(static_cast<long>(i)) / n);
    best = std::max(best, std::max(up, dn));
  }
  return best;
}

Real star_discrepancy(std::vector<Real> points) {
  if (points.empty()) fail(Errc::EmptyInput, "star discrepancy of an empty set");
  std::sort(points.begin(), points.end());
  const Real n = static_cast<long>(points.size());
  Real best = 0;
  for (size_t i = 0; i < points.size(); ++i) {
    Real up = abs(Real(static_cast<long>(i) + 1) / n - points[i]);
    Real dn = abs(points[i] - Real(static_cast<long>(i)) / n);
    best = std::max(best, std::max(up, dn));
  }
  return best;
}

std::string endpoints_csv(const SplitLedger& ledger) {
  std::string out = "value_exact,value_float,first_stage_seen,set_membership\n";
  char buf[64];
  for (const auto& e : ledger.endpoints) {
    if (e.value_q) out += fraction_str(*e.value_q);
    std::snprintf(buf, sizeof buf, ",%.17g,%d,%s\n", to_double(e.value), e.first_stage,
                  e.in_left ? "both" : "E");
    out += buf;
  }
  return out;
}

std::string stage_summary_csv(const SplitLedger& ledger) {
  std::string out = "stage,max_length,intervals_split,endpoints,left_count,dstar_left\n";
  char buf[96];
  for (const auto& s : ledger.stages) {
    out += std::to_string(s.stage) + ",";
    if (s.max_length_q)
      out += fraction_str(*s.max_length_q);
    else {
      std::snprintf(buf, sizeof buf, "%.17g", to_double(s.max_length));
      out += buf;
    }
    std::snprintf(buf, sizeof buf, ",%lld,%lld,%lld,%.17g\n", s.intervals_split, s.endpoint_count,
                  s.left_count, s.dstar_left);
    out += buf;
  }
  return out;
}

}  // namespace ksplit
