// Acceptance suite: one PASS/FAIL line per criterion. Exits nonzero when a
// hard criterion fails; criterion 8 only warns.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cli_runner.hpp"
#include "flatclust/bip.hpp"
#include "flatclust/clustering.hpp"
#include "flatclust/flatten.hpp"
#include "flatclust/harness.hpp"
#include "flatclust/io.hpp"
#include "flatclust/partition.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace flatclust;

namespace {

constexpr double kSolverTol = 1e-9;
constexpr double kSumTol = 1e-9;
constexpr double kRecoveryThreshold = 0.95;

constexpr double kLimitDirac = 10.0;
constexpr double kLimitSolver = 30.0;
constexpr double kLimitRand = 60.0;
constexpr double kLimitMorphism = 60.0;
constexpr double kLimitConsistency = 300.0;

struct Outcome {
  bool pass = true;
  std::string detail;
};

class Clock {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fmt(double x, int digits = 3) {
  std::ostringstream ss;
  ss.setf(std::ios::fixed);
  ss.precision(digits);
  ss << x;
  return ss.str();
}

std::vector<std::size_t> identity_map(std::size_t n) {
  std::vector<std::size_t> id(n);
  std::iota(id.begin(), id.end(), std::size_t{0});
  return id;
}

Outcome dirac_identity() {
  Clock clock;
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> a(0.0, 1.0);
  const auto H = make_single_linkage_functor();
  std::size_t bad = 0;
  for (int t = 0; t < 50; ++t) {
    const auto X = MetricSpace::from_point_cloud(
        testing::random_cloud(1 + gen() % 30, 2, gen, 3.0));
    double av = a(gen);
    if (av == 0.0) av = 1.0;
    const HyperparamPoint p{{av}};
    if (flatten(H, dirac_measure(H.space, p), X) != single_linkage(X, av)) ++bad;
  }
  const double s = clock.seconds();
  return {bad == 0 && s < kLimitDirac,
          std::to_string(50 - bad) + "/50 equal, " + fmt(s) + " s"};
}

Outcome solver_oracle() {
  Clock clock;
  std::mt19937_64 gen(2);
  std::size_t bad = 0;
  for (int t = 0; t < 200; ++t) {
    const auto prog = testing::random_program(1 + gen() % 15, 1 + gen() % 15, gen);
    BipSolution e, b;
    bool e_ok = true, b_ok = true;
    try {
      e = solve_exact(prog);
    } catch (const Error&) {
      e_ok = false;
    }
    try {
      b = solve_bruteforce(prog);
    } catch (const Error&) {
      b_ok = false;
    }
    const bool same = e_ok == b_ok &&
                      (!e_ok || (e.v == b.v && std::abs(e.objective - b.objective) <= kSolverTol));
    if (!same) ++bad;
  }
  const double s = clock.seconds();
  return {bad == 0 && s < kLimitSolver,
          std::to_string(200 - bad) + "/200 match, " + fmt(s) + " s"};
}

Outcome rand_likelihood_check() {
  Clock clock;
  std::mt19937_64 gen(3);
  std::size_t bad_denominator = 0, bad_sum = 0;
  double worst = 0.0;
  for (std::size_t n = 2; n <= 8; ++n) {
    const auto all = testing::all_partitions(n);
    for (int t = 0; t < 20; ++t) {
      const auto observed = testing::random_partition(n, gen);
      const auto produced = testing::random_partition(n, gen);
      if (rand_normalizer(produced) != BigInt(testing::brute_rand_denominator(produced)))
        ++bad_denominator;
      double sum = 0.0;
      for (const auto& Q : all) sum += rand_likelihood(Q, produced);
      worst = std::max(worst, std::abs(sum - 1.0));
      if (std::abs(sum - 1.0) > kSumTol) ++bad_sum;
      if (!(rand_likelihood(observed, produced) >= 0.0)) ++bad_sum;
    }
  }
  const Partition P(3, {{0, 1}, {2}});
  const bool worked = rand_likelihood(P, P) == 3.0 / 8.0;
  const double s = clock.seconds();
  std::ostringstream d;
  d << "denominator mismatches " << bad_denominator << ", max |sum-1| " << worst
    << ", 3/8 " << (worked ? "ok" : "wrong") << ", " << fmt(s) << " s";
  return {bad_denominator == 0 && bad_sum == 0 && worked && s < kLimitRand, d.str()};
}

Outcome morphism_equations() {
  Clock clock;
  std::mt19937_64 gen(4);
  std::uniform_real_distribution<double> factor(0.3, 1.0);
  const auto H = make_single_linkage_functor();
  std::size_t checked = 0, bad = 0, attempts = 0;
  while (checked < 50 && attempts < 5000) {
    ++attempts;
    const std::size_t n = 3 + gen() % 10;
    const auto X = MetricSpace::from_point_cloud(testing::random_cloud(n, 2, gen, 3.0));
    std::vector<std::size_t> p1 = identity_map(n), p2 = identity_map(n);
    std::shuffle(p1.begin(), p1.end(), gen);
    std::shuffle(p2.begin(), p2.end(), gen);
    std::vector<std::size_t> inv1(n), inv2(n);
    for (std::size_t i = 0; i < n; ++i) inv1[p1[i]] = i;
    for (std::size_t i = 0; i < n; ++i) inv2[p2[i]] = i;
    // Point i of X is point p1[i] of Y, and point j of Y is point p2[j] of Z.
    const auto Y = X.scaled(factor(gen)).permuted(inv1);
    const auto Z = Y.scaled(factor(gen)).permuted(inv2);
    const auto mu = uniform_measure(H.space, 12, gen());
    const auto SX = collect_partitions(H, mu, X, CollectMode::ParticleExact);
    const auto SY = collect_partitions(H, mu, Y, CollectMode::ParticleExact);
    const auto SZ = collect_partitions(H, mu, Z, CollectMode::ParticleExact);
    if (SY.size() > SX.size() || SZ.size() > SY.size()) continue;
    const auto PX = build_bip(SX), PY = build_bip(SY), PZ = build_bip(SZ);
    const auto phi = build_morphism(SX, SY, p1, provenance_joint_mass(SX, SY));
    const auto psi = build_morphism(SY, SZ, p2, provenance_joint_mass(SY, SZ));
    if (!verify_morphism(PX, PY, phi) || !verify_morphism(PY, PZ, psi) ||
        !verify_morphism(PX, PZ, compose_morphisms(phi, psi)))
      ++bad;
    ++checked;
  }
  const double s = clock.seconds();
  return {checked == 50 && bad == 0 && s < kLimitMorphism,
          std::to_string(checked - bad) + "/" + std::to_string(checked) +
              " verified with composition (" + std::to_string(attempts) + " drawn), " +
              fmt(s) + " s"};
}

Outcome functoriality() {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> a(0.0, 1.0);
  auto param = [&] {
    const double v = a(gen);
    return v == 0.0 ? 1.0 : v;
  };
  std::size_t mono = 0, met = 0, bij = 0;
  for (int t = 0; t < 100; ++t) {
    const auto X = MetricSpace::from_point_cloud(
        testing::random_cloud(2 + gen() % 15, 2, gen, 4.0));
    double hi = param(), lo = param();
    if (hi < lo) std::swap(hi, lo);
    if (!refines(single_linkage(X, hi), single_linkage(X, lo))) ++mono;
  }
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 2 + gen() % 12;
    const auto X = MetricSpace::from_point_cloud(testing::random_cloud(n, 2, gen, 3.0));
    const auto f = testing::random_contraction(X, 1 + gen() % n, gen);
    const double av = param();
    if (!check_nonexpansive({X, f.target, f.mapping}) ||
        !is_partition_morphism(f.mapping, single_linkage(X, av), single_linkage(f.target, av)))
      ++met;
  }
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 2 + gen() % 12;
    const auto X = MetricSpace::from_point_cloud(testing::random_cloud(n, 2, gen, 3.0));
    const auto f = testing::random_contraction(X, n, gen, true);
    const double a1 = param(), a2 = param();
    if (!check_nonexpansive({X, f.target, f.mapping}) ||
        !is_partition_morphism(f.mapping, robust_single_linkage(X, a1, a2),
                               robust_single_linkage(f.target, a1, a2)))
      ++bij;
  }
  std::ostringstream d;
  d << "violations: monotonicity " << mono << "/100, single linkage " << met
    << "/100, robust single linkage " << bij << "/100";
  return {mono == 0 && met == 0 && bij == 0, d.str()};
}

Outcome consistency() {
  Clock clock;
  const ConsistencyConfig cfg;  // k 6, 400 particles, 50 updates, 40 trials, seed 0
  const auto r = consistency_experiment(cfg);
  std::size_t collapsed = 0;
  for (const auto& t : r.trials) collapsed += t.collapsed ? 1 : 0;
  const double s = clock.seconds();
  std::ostringstream d;
  d << "recovery " << fmt(r.recovery_rate) << " (threshold " << fmt(kRecoveryThreshold, 2)
    << ", collapsed " << collapsed << "), " << fmt(s) << " s";
  return {r.recovery_rate >= kRecoveryThreshold && s < kLimitConsistency, d.str()};
}

Outcome tree_fast_path() {
  std::mt19937_64 gen(7);
  const auto H = make_single_linkage_functor();
  std::size_t bad = 0;
  for (int t = 0; t < 50; ++t) {
    const auto X = MetricSpace::from_point_cloud(
        testing::random_cloud(2 + gen() % 25, 2, gen, 3.0));
    const auto mu = uniform_measure(H.space, 64, gen());
    const auto tree = flatten_tree(H, mu, X);
    const auto S = collect_partitions(H, mu, X, CollectMode::ParticleExact);
    if (tree.objective != solve_exact(build_bip(S)).objective) ++bad;
  }
  return {bad == 0, std::to_string(50 - bad) + "/50 objectives equal"};
}

Outcome benchmark(std::string& table_text) {
  const auto H = make_single_linkage_functor();
  const auto mu = uniform_measure(H.space, 200, 0);
  const auto t = benchmark_flatten_vs_fixed(H, {}, mu, {CollectMode::ParticleExact, 0, 0}, 0);
  std::ostringstream table;
  for (const auto& row : t.rows) {
    table << "    " << row.label << "  ";
    if (!row.a.coords.empty()) table << "a=" << fmt(row.a[0], 2) << "  ";
    table << "ars=" << fmt(row.ars, 6) << "\n";
  }
  table_text = table.str();
  std::ostringstream d;
  d << "flatten " << fmt(t.flatten_ars, 6) << ", median grid " << fmt(t.median_grid_ars, 6)
    << ", best grid " << fmt(t.best_grid_ars, 6);
  return {t.flatten_ars >= t.median_grid_ars, d.str()};
}

Outcome reproducibility() {
  const auto root = fs::temp_directory_path() / "flatclust_acceptance";
  fs::remove_all(root);
  fs::create_directories(root / "data" / "item0");
  fs::create_directories(root / "data" / "item1");
  std::mt19937_64 gen(9);
  io::write_file_atomic(root / "pts.csv", io::points_to_csv(testing::random_cloud(25, 2, gen)));
  io::write_file_atomic(root / "labels.csv", "0\n0\n1\n1\n2\n2\n0\n1\n2\n0\n1\n2\n0\n1\n2\n0\n"
                                             "1\n2\n0\n1\n2\n0\n1\n2\n0\n");
  for (const char* item : {"item0", "item1"}) {
    io::write_file_atomic(root / "data" / item / "points.csv",
                          io::points_to_csv(testing::random_cloud(6, 2, gen)));
    io::write_file_atomic(root / "data" / item / "labels.csv", "0\n0\n1\n1\n2\n2\n");
  }
  const auto q = [&](const std::string& name) { return "'" + (root / name).string() + "'"; };

  struct Command {
    std::string name;
    std::string args;
    std::vector<std::string> files;
  };
  const std::vector<Command> commands{
      {"cluster", "cluster --a 0.6 --points " + q("pts.csv") + " --out " + q("o.json"),
       {"o.json"}},
      {"cluster-rsl",
       "cluster --functor robust-single-linkage --a 0.2,0.5 --points " + q("pts.csv"), {}},
      {"flatten",
       "flatten --measure uniform:50 --samples 300 --seed 4 --points " + q("pts.csv") +
           " --out " + q("o.json") + " --emit-bip " + q("b.json"),
       {"o.json", "b.json"}},
      {"flatten-rsl",
       "flatten --functor robust-single-linkage --mode particle --measure uniform:30 "
       "--points " + q("pts.csv"),
       {}},
      {"flatten-tree", "flatten --tree --mode particle --measure uniform:40 --points " +
                           q("pts.csv"),
       {}},
      {"learn",
       "learn --prior uniform:60 --seed 5 --data " + q("data") + " --out " + q("o.json") +
           " --ess-log " + q("e.csv"),
       {"o.json", "e.csv"}},
      {"eval", "eval --pred " + q("o.json") + " --labels " + q("labels.csv"), {}},
      {"consistency",
       "consistency --k 5 --updates 10 --particles 60 --trials 4 --seed 6 --out " +
           q("c.json") + " --hist " + q("h.csv"),
       {"c.json", "h.csv"}},
      {"bench", "bench --prior uniform:60 --seed 2 --out " + q("t.json"), {"t.json"}},
  };

  std::vector<std::string> differing;
  for (const auto& c : commands) {
    // eval reads the cluster output, so refresh it first.
    if (c.name == "eval")
      testing::run_cli("cluster --a 0.6 --points " + q("pts.csv") + " --out " + q("o.json"),
                       root);
    std::vector<std::string> first;
    bool ok = true;
    for (int run = 0; run < 2; ++run) {
      const auto r = testing::run_cli(c.args, root);
      std::vector<std::string> outputs{std::to_string(r.status), r.out};
      for (const auto& f : c.files) outputs.push_back(testing::slurp(root / f));
      if (r.status != 0) ok = false;
      if (run == 0) first = outputs;
      else if (outputs != first) ok = false;
    }
    if (!ok) differing.push_back(c.name);
  }
  fs::remove_all(root);
  std::string d = std::to_string(commands.size() - differing.size()) + "/" +
                  std::to_string(commands.size()) + " commands byte-identical";
  for (const auto& name : differing) d += " [" + name + " differs or failed]";
  return {differing.empty(), d};
}

}  // namespace

int main() {
  bool hard_failure = false;
  auto report = [&](int id, const std::string& name, const std::function<Outcome()>& fn) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::cout << "criterion " << id << " " << name << ": " << (o.pass ? "PASS" : "FAIL")
              << " (" << o.detail << ")" << std::endl;
    if (!o.pass) hard_failure = true;
  };

  report(1, "dirac-identity", dirac_identity);
  report(2, "solver-oracle", solver_oracle);
  report(3, "rand-likelihood", rand_likelihood_check);
  report(4, "morphism-equations", morphism_equations);
  report(5, "functoriality", functoriality);
  report(6, "consistency", consistency);
  report(7, "tree-fast-path", tree_fast_path);

  std::string table;
  Outcome bench;
  try {
    bench = benchmark(table);
  } catch (const std::exception& e) {
    bench = {false, std::string("exception: ") + e.what()};
  }
  std::cout << "criterion 8 benchmark: " << (bench.pass ? "PASS" : "FAIL (soft, warning only)")
            << " (" << bench.detail << ")" << std::endl;
  if (!bench.pass) std::cout << "  warning: flatten below median grid ARS\n" << table;

  report(9, "reproducibility", reproducibility);
  return hard_failure ? 1 : 0;
}
