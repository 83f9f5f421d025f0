#include <gtest/gtest.h>

#include <cstdlib>
#include <random>

#include "flatclust/harness.hpp"

namespace flatclust {
namespace {

ConsistencyConfig small_config() {
  ConsistencyConfig cfg;
  cfg.k = 5;
  cfg.n_updates = 15;
  cfg.n_particles = 80;
  cfg.trials = 6;
  cfg.seed = 3;
  return cfg;
}

TEST(Consistency, DegenerateConfigStillWellFormed) {
  ConsistencyConfig cfg;
  cfg.region_lo = {0.5, 0.5};
  cfg.region_hi = {0.5, 0.5};
  cfg.k = 2;
  cfg.n_updates = 0;
  cfg.n_particles = 5;
  cfg.trials = 3;
  const auto r = consistency_experiment(cfg);
  ASSERT_EQ(r.trials.size(), 3u);
  EXPECT_GE(r.recovery_rate, 0.0);
  EXPECT_LE(r.recovery_rate, 1.0);
  for (const auto& t : r.trials) {
    EXPECT_EQ(t.equivalence_mass.size(), 1u);
    EXPECT_TRUE(t.ess.empty());
    EXPECT_EQ(t.truth.ground_size(), 2u);
  }
}

TEST(Consistency, ConfigValidation) {
  ConsistencyConfig cfg;
  cfg.k = 1;
  EXPECT_THROW(consistency_experiment(cfg), Error);
  cfg = ConsistencyConfig{};
  cfg.region_hi = {1.0};
  EXPECT_THROW(consistency_experiment(cfg), Error);
  cfg = ConsistencyConfig{};
  cfg.functor = "nope";
  EXPECT_THROW(consistency_experiment(cfg), Error);
}

TEST(Consistency, ReproducibleAndThreadIndependent) {
  const auto cfg = small_config();
  const auto a = consistency_experiment(cfg);
  setenv("FLATCLUST_THREADS", "1", 1);
  const auto b = consistency_experiment(cfg);
  unsetenv("FLATCLUST_THREADS");
  EXPECT_EQ(a.recovery_rate, b.recovery_rate);
  for (std::size_t t = 0; t < cfg.trials; ++t) {
    EXPECT_EQ(a.trials[t].a_star, b.trials[t].a_star);
    EXPECT_EQ(a.trials[t].equivalence_mass, b.trials[t].equivalence_mass);
    EXPECT_EQ(a.trials[t].posterior, b.trials[t].posterior);
    EXPECT_EQ(a.trials[t].output, b.trials[t].output);
  }
}

TEST(Consistency, EquivalenceMassTrendsUpward) {
  auto cfg = small_config();
  cfg.n_updates = 30;
  const auto r = consistency_experiment(cfg);
  for (const auto& t : r.trials) {
    if (t.collapsed) continue;
    const auto& m = t.equivalence_mass;
    std::size_t up = 0, down = 0;
    for (std::size_t i = 1; i < m.size(); ++i) {
      if (m[i] > m[i - 1] + 1e-15) ++up;
      if (m[i] < m[i - 1] - 1e-15) ++down;
    }
    EXPECT_GE(up, down);
    EXPECT_GE(m.back(), m.front());
  }
}

TEST(Consistency, SelectionSoundness) {
  const auto cfg = small_config();
  const auto H = make_functor(cfg.functor);
  const auto r = consistency_experiment(cfg);
  for (const auto& t : r.trials) {
    if (t.collapsed) continue;
    // Rebuild the evaluation set exactly as the trial does.
    const auto X = MetricSpace::from_point_cloud([&] {
      std::size_t idx = static_cast<std::size_t>(&t - r.trials.data());
      Rng eval(derive_seed(derive_seed(cfg.seed, idx), 2));
      return uniform_points(cfg.region_lo, cfg.region_hi, cfg.k, eval);
    }());
    ASSERT_EQ(H(X, t.a_star), t.truth);
    for (const auto& b : t.output.blocks()) {
      if (b.size() == 1 && t.output.is_noise(b[0])) continue;
      bool seen = false;
      for (const auto& p : t.posterior.particles())
        if (p.w > 0.0) {
          const auto P = H(X, p.a);
          if (std::find(P.blocks().begin(), P.blocks().end(), b) != P.blocks().end()) {
            seen = true;
            break;
          }
        }
      EXPECT_TRUE(seen);
    }
  }
}

TEST(Histogram, Examples) {
  const auto O = HyperparamSpace::unit_op(1);
  const auto dirac = posterior_histogram(dirac_measure(O, {{0.37}}), 0, 10);
  ASSERT_EQ(dirac.edges.size(), 11u);
  EXPECT_EQ(std::count_if(dirac.mass.begin(), dirac.mass.end(),
                          [](double m) { return m > 0.0; }),
            1);
  EXPECT_EQ(dirac.mode_bin(), 3u);

  const auto uni = posterior_histogram(uniform_measure(O, 10000, 4), 0, 10);
  double total = 0.0;
  for (double m : uni.mass) {
    EXPECT_GE(m, 0.08);
    EXPECT_LE(m, 0.12);
    total += m;
  }
  EXPECT_NEAR(total, 1.0, 1e-9);

  // a = 1 lands in the last bin.
  const auto top = posterior_histogram(dirac_measure(O, {{1.0}}), 0, 4);
  EXPECT_EQ(top.mode_bin(), 3u);

  EXPECT_THROW(posterior_histogram(dirac_measure(O, {{0.5}}), 1, 10), Error);
  EXPECT_THROW(posterior_histogram(dirac_measure(O, {{0.5}}), 0, 0), Error);
}

TEST(Histogram, ModeBinMeetsEquivalenceRegion) {
  auto cfg = small_config();
  cfg.n_updates = 30;
  cfg.n_particles = 200;
  const auto H = make_functor(cfg.functor);
  const auto r = consistency_experiment(cfg);
  std::size_t checked = 0, hits = 0;
  for (std::size_t idx = 0; idx < r.trials.size(); ++idx) {
    const auto& t = r.trials[idx];
    if (!t.recovered) continue;
    Rng eval(derive_seed(derive_seed(cfg.seed, idx), 2));
    const auto X = MetricSpace::from_point_cloud(
        uniform_points(cfg.region_lo, cfg.region_hi, cfg.k, eval));
    const auto h = posterior_histogram(t.posterior, 0, 20);
    const std::size_t b = h.mode_bin();
    ++checked;
    for (const auto& p : t.posterior.particles())
      if (p.a[0] >= h.edges[b] && p.a[0] <= h.edges[b + 1] && p.w > 0.0 &&
          H(X, p.a).same_blocks(t.truth)) {
        ++hits;
        break;
      }
  }
  ASSERT_GT(checked, 0u);
  EXPECT_GE(2 * hits, checked);
}

TEST(Blobs, ShapeAndReproducibility) {
  BlobConfig cfg;
  const auto a = make_blobs(cfg, 5);
  EXPECT_EQ(a.points.size(), 60u);
  EXPECT_EQ(a.labels.size(), 60u);
  EXPECT_EQ(a.points[0].size(), 2u);
  EXPECT_EQ(a.labels.back(), 2);
  const auto b = make_blobs(cfg, 5);
  EXPECT_EQ(a.points, b.points);
  EXPECT_NE(make_blobs(cfg, 6).points, a.points);
}

TEST(ParameterGrid, Sizes) {
  const auto g1 = parameter_grid(HyperparamSpace::unit_op(1));
  EXPECT_EQ(g1.size(), 20u);
  EXPECT_DOUBLE_EQ(g1.front()[0], 0.05);
  EXPECT_DOUBLE_EQ(g1.back()[0], 1.0);
  EXPECT_EQ(parameter_grid(HyperparamSpace::unit_op(2)).size(), 20u);
  EXPECT_THROW(parameter_grid(HyperparamSpace::unit_op(3)), Error);
}

TEST(Benchmark, TableShape) {
  const auto H = make_single_linkage_functor();
  const auto mu = uniform_measure(H.space, 50, 1);
  const auto t = benchmark_flatten_vs_fixed(H, {}, mu, {}, 2);
  EXPECT_EQ(t.rows.size(), 21u);
  EXPECT_EQ(t.rows.back().label, "flatten");
  EXPECT_EQ(t.rows.back().ars, t.flatten_ars);
  EXPECT_GE(t.best_grid_ars, t.median_grid_ars);
}

TEST(Benchmark, SingleBlob) {
  const auto H = make_single_linkage_functor();
  BlobConfig cfg;
  cfg.blobs = 1;
  const auto t = benchmark_flatten_vs_fixed(H, cfg, uniform_measure(H.space, 30, 1), {}, 2);
  EXPECT_EQ(t.rows.size(), 21u);
  // Against a one-block truth every ARS is 0 or 1.
  for (const auto& row : t.rows) EXPECT_TRUE(row.ars == 0.0 || row.ars == 1.0);
}

TEST(Benchmark, Reproducible) {
  const auto H = make_robust_sl_functor();
  const auto mu = uniform_measure(H.space, 40, 1);
  const FlattenOptions opt{CollectMode::Sampling, 100, 4};
  const auto a = benchmark_flatten_vs_fixed(H, {}, mu, opt, 9);
  const auto b = benchmark_flatten_vs_fixed(H, {}, mu, opt, 9);
  ASSERT_EQ(a.rows.size(), b.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) EXPECT_EQ(a.rows[i].ars, b.rows[i].ars);
}

}  // namespace
}  // namespace flatclust
