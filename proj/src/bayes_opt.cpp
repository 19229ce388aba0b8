#include "drc/bayes_opt.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "drc/error.hpp"

namespace drc {

namespace {

Vector to_box(const Vector& unit, const Box& bounds) {
  Vector out(unit.size());
  for (Index i = 0; i < unit.size(); ++i) {
    const auto [lo, hi] = bounds[static_cast<std::size_t>(i)];
    out[i] = lo + unit[i] * (hi - lo);
  }
  return out;
}

std::vector<Vector> latin_hypercube(std::size_t count, Index dim, Rng& rng) {
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::vector<Vector> pts(count, Vector(dim));
  std::vector<std::size_t> strata(count);
  for (Index d = 0; d < dim; ++d) {
    std::iota(strata.begin(), strata.end(), std::size_t{0});
    std::shuffle(strata.begin(), strata.end(), rng);
    for (std::size_t i = 0; i < count; ++i)
      pts[i][d] = (static_cast<double>(strata[i]) + u01(rng)) / static_cast<double>(count);
  }
  return pts;
}

}  // namespace

BoResult bo_minimize(const std::function<double(const Vector&)>& objective, const Box& bounds,
                     const BoOptions& options, std::int64_t seed) {
  require(!bounds.empty(), "BO needs at least one dimension");
  for (const auto& [lo, hi] : bounds) require(lo < hi && std::isfinite(lo) && std::isfinite(hi), "invalid BO bounds");
  require(options.init_count >= 2, "BO needs at least two initial points");
  require(options.budget >= options.init_count, "BO budget must cover the initial design");
  const Index dim = static_cast<Index>(bounds.size());
  const auto base = static_cast<std::uint64_t>(seed);

  BoResult result;
  std::vector<Vector> unit_points;
  std::vector<double> values;
  auto evaluate = [&](const Vector& unit) {
    BoTraceEntry e;
    e.iteration = result.trace.size();
    e.point = to_box(unit, bounds);
    try {
      e.value = objective(e.point);
      if (!std::isfinite(e.value)) throw Error(ErrorCode::numeric, "objective returned a non-finite value");
    } catch (const std::exception&) {
      e.value = options.failure_value;
      e.failed = true;
    }
    if (result.trace.empty() || e.value < result.best_value) {
      result.best_value = e.value;
      result.best_point = e.point;
    }
    e.incumbent = result.best_value;
    unit_points.push_back(unit);
    values.push_back(e.value);
    result.trace.push_back(std::move(e));
  };
  auto reached_target = [&] { return options.target && result.best_value <= *options.target; };

  Rng init_rng = make_rng(base, 0);
  for (const auto& p : latin_hypercube(options.init_count, dim, init_rng)) {
    evaluate(p);
    if (reached_target()) return result;
  }

  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  while (result.trace.size() < options.budget && !reached_target()) {
    Matrix x(static_cast<Index>(unit_points.size()), dim);
    for (std::size_t i = 0; i < unit_points.size(); ++i) x.row(static_cast<Index>(i)) = unit_points[i].transpose();
    const Vector y = Eigen::Map<const Vector>(values.data(), static_cast<Index>(values.size()));
    const GpModel model = gp_fit(x, y, options.gp);

    Rng rng = make_rng(base, result.trace.size() + 1);
    struct Scored {
      Vector point;
      double ei;
    };
    std::vector<Scored> pool;
    pool.reserve(options.candidate_count + options.local_count);
    for (std::size_t c = 0; c < options.candidate_count; ++c) {
      Vector p(dim);
      for (Index d = 0; d < dim; ++d) p[d] = u01(rng);
      pool.push_back({p, expected_improvement(model, p, result.best_value)});
    }
    // Local refinement around the incumbent and the best random candidates.
    std::vector<Vector> centres;
    const auto incumbent = std::min_element(values.begin(), values.end()) - values.begin();
    centres.push_back(unit_points[static_cast<std::size_t>(incumbent)]);
    std::vector<std::size_t> order(pool.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    const std::size_t top = std::min<std::size_t>(4, order.size());
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(top), order.end(),
                      [&](std::size_t a, std::size_t b) { return pool[a].ei > pool[b].ei; });
    for (std::size_t i = 0; i < top; ++i) centres.push_back(pool[order[i]].point);
    const double radii[] = {0.01, 0.03, 0.1};
    for (std::size_t c = 0; c < options.local_count; ++c) {
      const Vector& centre = centres[c % centres.size()];
      const double r = radii[(c / centres.size()) % 3];
      Vector p(dim);
      for (Index d = 0; d < dim; ++d) p[d] = std::clamp(centre[d] + r * normal(rng), 0.0, 1.0);
      pool.push_back({p, expected_improvement(model, p, result.best_value)});
    }
    std::size_t pick = 0;
    for (std::size_t i = 1; i < pool.size(); ++i)
      if (pool[i].ei > pool[pick].ei) pick = i;
    evaluate(pool[pick].point);
  }
  return result;
}

double HyperPoint::lambda() const { return std::pow(10.0, log10_lambda); }

Vector HyperPoint::as_vector() const {
  Vector v(3);
  v << feedback_gain, input_gain, log10_lambda;
  return v;
}

HyperPoint HyperPoint::from_vector(const Vector& v) {
  require(v.size() == 3, "hyperparameter vectors have three entries");
  return {v[0], v[1], v[2]};
}

HyperSearchResult bo_optimize(const std::function<double(const HyperPoint&)>& objective,
                              const HyperBounds& bounds, const BoOptions& options, std::int64_t seed) {
  const auto run = bo_minimize([&](const Vector& v) { return objective(HyperPoint::from_vector(v)); },
                               bounds.box(), options, seed);
  return {HyperPoint::from_vector(run.best_point), run.best_value, run.trace};
}

std::string bo_trace_text(const std::vector<BoTraceEntry>& trace, const std::vector<std::string>& names) {
  std::ostringstream os;
  os.precision(10);
  os << "iteration";
  for (const auto& n : names) os << '\t' << n;
  os << "\tvalue\tincumbent\tfailed\n";
  for (const auto& e : trace) {
    os << e.iteration;
    for (Index i = 0; i < e.point.size(); ++i) os << '\t' << e.point[i];
    os << '\t' << e.value << '\t' << e.incumbent << '\t' << (e.failed ? 1 : 0) << '\n';
  }
  return os.str();
}

}  // namespace drc
