// flatclust: command-line front end.
//
//   flatclust cluster     --functor F --a A[,A2] --points X.csv
//   flatclust flatten     --functor F --measure M --points X.csv
//   flatclust learn       --functor F --prior uniform:N --data DIR
//   flatclust eval        --pred P --labels L
//   flatclust consistency [--k 6 --updates 50 --particles 400 --trials 40]
//   flatclust bench       [--blobs 3 --points-per-blob 20]
//
// Exit status: 0 success, 1 domain error, 2 usage error.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "flatclust/bayes.hpp"
#include "flatclust/bip.hpp"
#include "flatclust/clustering.hpp"
#include "flatclust/error.hpp"
#include "flatclust/flatten.hpp"
#include "flatclust/harness.hpp"
#include "flatclust/io.hpp"
#include "flatclust/metric.hpp"
#include "flatclust/partition.hpp"

namespace fs = std::filesystem;
using namespace flatclust;

namespace {

struct InputOptions {
  std::string points;
  bool matrix = false;
  bool no_triangle_check = false;

  void add_to(CLI::App* cmd, bool required = true) {
    auto* opt = cmd->add_option("--points", points,
                                "Point-cloud CSV (one row per point), or a "
                                "distance matrix with --matrix");
    if (required) opt->required();
    cmd->add_flag("--matrix", matrix, "Read --points as a square distance matrix");
    cmd->add_flag("--no-triangle-check", no_triangle_check,
                  "Skip triangle-inequality validation of --matrix input");
  }

  MetricSpace load() const {
    return matrix ? io::read_distance_csv(points, !no_triangle_check)
                  : io::read_points_csv(points);
  }
};

void add_functor_option(CLI::App* cmd, std::string& functor) {
  cmd->add_option("--functor", functor, "Clustering functor")
      ->check(CLI::IsMember({"single-linkage", "robust-single-linkage"}))
      ->capture_default_str();
}

/// "uniform:N", "dirac:a1[,a2]" or a measure JSON file.
ParamMeasure load_measure(const std::string& spec, const ClusteringFunctor& H,
                          std::uint64_t seed) {
  if (spec.rfind("uniform:", 0) == 0) {
    const auto n = std::stoul(spec.substr(8));
    return uniform_measure(H.space, n, seed);
  }
  if (spec.rfind("dirac:", 0) == 0) {
    HyperparamPoint a;
    std::stringstream ss(spec.substr(6));
    std::string tok;
    while (std::getline(ss, tok, ',')) a.coords.push_back(std::stod(tok));
    return dirac_measure(H.space, a);
  }
  auto mu = io::read_measure(spec);
  detail::require(mu.space().dims() == H.space.dims(),
                  ErrorCode::dimension_mismatch,
                  "measure dimension does not match the functor");
  return mu;
}

CollectMode parse_mode(const std::string& mode) {
  return mode == "particle" ? CollectMode::ParticleExact : CollectMode::Sampling;
}

Likelihood parse_likelihood(const std::string& s) {
  return s == "exact" ? Likelihood::ExactMatch : Likelihood::Rand;
}

void emit(const std::string& path, const std::string& content) {
  if (path.empty() || path == "-") std::cout << content;
  else io::write_file_atomic(path, content);
}

std::string fixed6(double x) {
  std::ostringstream ss;
  ss << std::fixed << std::setprecision(6) << x;
  return ss.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Flattening of hyperparameter-indexed hierarchical clusterings"};
  app.require_subcommand(1);

  // cluster -----------------------------------------------------------------
  auto* cluster = app.add_subcommand("cluster", "Evaluate a functor at one hyperparameter");
  std::string cl_functor = "single-linkage";
  std::vector<double> cl_a;
  InputOptions cl_in;
  std::string cl_out;
  add_functor_option(cluster, cl_functor);
  cluster->add_option("--a", cl_a, "Hyperparameter coordinates (comma separated)")
      ->required()
      ->delimiter(',');
  cl_in.add_to(cluster);
  cluster->add_option("--out", cl_out, "Partition JSON output (default stdout)");

  // flatten -----------------------------------------------------------------
  auto* flat = app.add_subcommand("flatten", "Flatten a functor over a measure");
  std::string fl_functor = "single-linkage", fl_measure, fl_mode = "sampling",
              fl_out, fl_bip;
  std::size_t fl_samples = 1000;
  std::uint64_t fl_seed = 0;
  bool fl_tree = false;
  InputOptions fl_in;
  add_functor_option(flat, fl_functor);
  flat->add_option("--measure", fl_measure,
                   "Measure JSON file, uniform:N or dirac:a1[,a2]")
      ->required();
  fl_in.add_to(flat);
  flat->add_option("--samples", fl_samples, "Monte Carlo draws in sampling mode")
      ->capture_default_str();
  flat->add_option("--seed", fl_seed, "Random seed")->capture_default_str();
  flat->add_option("--mode", fl_mode, "Collection mode")
      ->check(CLI::IsMember({"sampling", "particle"}))
      ->capture_default_str();
  flat->add_flag("--tree", fl_tree,
                 "Use the containment-tree solver (one-dimensional functors)");
  flat->add_option("--out", fl_out, "Partition JSON output (default stdout)");
  flat->add_option("--emit-bip", fl_bip, "Also write the binary integer program JSON");

  // learn -------------------------------------------------------------------
  auto* learn = app.add_subcommand("learn", "Bayesian update of a measure on labeled data");
  std::string le_functor = "single-linkage", le_prior, le_data, le_out, le_ess,
              le_lik = "rand";
  std::uint64_t le_seed = 0;
  add_functor_option(learn, le_functor);
  learn->add_option("--prior", le_prior, "Measure JSON file or uniform:N")->required();
  learn->add_option("--data", le_data,
                    "Directory of item subdirectories, each holding points.csv "
                    "and labels.csv (processed in name order)")
      ->required()
      ->check(CLI::ExistingDirectory);
  learn->add_option("--seed", le_seed, "Seed for uniform priors")->capture_default_str();
  learn->add_option("--out", le_out, "Posterior measure JSON (default stdout)");
  learn->add_option("--ess-log", le_ess, "CSV of effective sample size per step");
  learn->add_option("--likelihood", le_lik, "Likelihood")
      ->check(CLI::IsMember({"rand", "exact"}))
      ->capture_default_str();

  // eval --------------------------------------------------------------------
  auto* eval = app.add_subcommand("eval", "Adjusted Rand score of a prediction");
  std::string ev_pred, ev_labels, ev_out;
  eval->add_option("--pred", ev_pred, "Predicted partition (JSON or labels CSV)")
      ->required();
  eval->add_option("--labels", ev_labels, "Reference labels (CSV or partition JSON)")
      ->required();
  eval->add_option("--out", ev_out, "Write {\"ars\": value} JSON here");

  // consistency -------------------------------------------------------------
  auto* cons = app.add_subcommand("consistency", "Posterior consistency experiment");
  ConsistencyConfig cc;
  std::string cc_lik = "rand", cc_out, cc_hist;
  std::size_t cc_bins = 20, cc_hist_trial = 0;
  add_functor_option(cons, cc.functor);
  cons->add_option("--region-lo", cc.region_lo, "Lower corner of the region")
      ->delimiter(',')
      ->capture_default_str();
  cons->add_option("--region-hi", cc.region_hi, "Upper corner of the region")
      ->delimiter(',')
      ->capture_default_str();
  cons->add_option("--k", cc.k, "Points per dataset")->capture_default_str();
  cons->add_option("--updates", cc.n_updates, "Labeled datasets per trial")
      ->capture_default_str();
  cons->add_option("--particles", cc.n_particles, "Prior particles")
      ->capture_default_str();
  cons->add_option("--trials", cc.trials, "Independent trials")->capture_default_str();
  cons->add_option("--seed", cc.seed, "Random seed")->capture_default_str();
  cons->add_option("--likelihood", cc_lik, "Likelihood")
      ->check(CLI::IsMember({"rand", "exact"}))
      ->capture_default_str();
  cons->add_option("--out", cc_out, "Report JSON output");
  cons->add_option("--hist", cc_hist, "Posterior histogram CSV (first axis)");
  cons->add_option("--bins", cc_bins, "Histogram bins")->capture_default_str();
  cons->add_option("--hist-trial", cc_hist_trial, "Trial whose posterior is histogrammed")
      ->capture_default_str();

  // bench -------------------------------------------------------------------
  auto* bench = app.add_subcommand("bench", "Flattening versus a fixed-parameter grid");
  std::string be_functor = "single-linkage", be_prior = "uniform:200",
              be_mode = "particle", be_out;
  BlobConfig blobs;
  std::size_t be_samples = 1000;
  std::uint64_t be_seed = 0;
  add_functor_option(bench, be_functor);
  bench->add_option("--blobs", blobs.blobs, "Number of blobs")->capture_default_str();
  bench->add_option("--points-per-blob", blobs.points_per_blob, "Points per blob")
      ->capture_default_str();
  bench->add_option("--dims", blobs.dims, "Ambient dimension")->capture_default_str();
  bench->add_option("--spread", blobs.spread, "Blob standard deviation")
      ->capture_default_str();
  bench->add_option("--separation", blobs.separation, "Radius of the blob centres")
      ->capture_default_str();
  bench->add_option("--prior", be_prior, "Measure JSON file or uniform:N")
      ->capture_default_str();
  bench->add_option("--mode", be_mode, "Collection mode")
      ->check(CLI::IsMember({"sampling", "particle"}))
      ->capture_default_str();
  bench->add_option("--samples", be_samples, "Draws in sampling mode")
      ->capture_default_str();
  bench->add_option("--seed", be_seed, "Random seed")->capture_default_str();
  bench->add_option("--out", be_out, "Table JSON output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*cluster) {
      const auto H = make_functor(cl_functor);
      const auto X = cl_in.load();
      const auto P = H(X, HyperparamPoint{cl_a});
      emit(cl_out, io::dump(io::to_json(P)));
    } else if (*flat) {
      const auto H = make_functor(fl_functor);
      const auto X = fl_in.load();
      const auto mu = load_measure(fl_measure, H, fl_seed);
      const FlattenOptions opt{parse_mode(fl_mode), fl_samples, fl_seed};
      FlattenResult r = fl_tree ? flatten_tree(H, mu, X, opt)
                                : flatten_detailed(H, mu, X, opt);
      if (!fl_bip.empty())
        emit(fl_bip, io::dump(io::to_json(fl_tree ? build_bip(r.collection)
                                                  : r.program)));
      emit(fl_out, io::dump(io::to_json(r.partition)));
    } else if (*learn) {
      const auto H = make_functor(le_functor);
      const auto mu0 = load_measure(le_prior, H, le_seed);
      std::vector<fs::path> dirs;
      for (const auto& entry : fs::directory_iterator(le_data))
        if (entry.is_directory()) dirs.push_back(entry.path());
      std::sort(dirs.begin(), dirs.end());
      std::vector<LabeledItem> items;
      for (const auto& d : dirs)
        items.push_back({io::read_points_csv(d / "points.csv"),
                         io::read_labels_csv(d / "labels.csv")});
      const auto trace =
          bayes_update_all(mu0, H, LabeledDataset(std::move(items)),
                           parse_likelihood(le_lik));
      if (!le_ess.empty()) {
        std::string csv = "step,ess\n";
        for (std::size_t i = 0; i < trace.ess.size(); ++i)
          csv += std::to_string(i + 1) + ',' + io::format_real(trace.ess[i]) + '\n';
        emit(le_ess, csv);
      }
      emit(le_out, io::dump(io::to_json(trace.posterior)));
    } else if (*eval) {
      const auto pred = io::read_partition(ev_pred);
      const auto labels = io::read_partition(ev_labels);
      const double ars = adjusted_rand_score(pred, labels);
      std::cout << fixed6(ars) << "\n";
      if (!ev_out.empty()) emit(ev_out, io::dump({{"ars", ars}}));
    } else if (*cons) {
      cc.likelihood = parse_likelihood(cc_lik);
      cc.validate();
      detail::require(cc_hist.empty() || cc_hist_trial < cc.trials,
                      ErrorCode::out_of_range, "--hist-trial out of range");
      const auto report = consistency_experiment(cc);
      std::cout << "trials     " << report.trials.size() << "\n"
                << "recovered  "
                << std::count_if(report.trials.begin(), report.trials.end(),
                                 [](const TrialRecord& t) { return t.recovered; })
                << "\n"
                << "collapsed  "
                << std::count_if(report.trials.begin(), report.trials.end(),
                                 [](const TrialRecord& t) { return t.collapsed; })
                << "\n"
                << "rate       " << fixed6(report.recovery_rate) << "\n";
      std::cerr << "runtime " << report.runtime_seconds << " s\n";
      if (!cc_out.empty()) emit(cc_out, io::dump(io::to_json(report)));
      if (!cc_hist.empty())
        emit(cc_hist, io::histogram_to_csv(posterior_histogram(
                          report.trials[cc_hist_trial].posterior, 0, cc_bins)));
    } else if (*bench) {
      const auto H = make_functor(be_functor);
      const auto mu0 = load_measure(be_prior, H, be_seed);
      const auto table = benchmark_flatten_vs_fixed(
          H, blobs, mu0, {parse_mode(be_mode), be_samples, be_seed}, be_seed);
      for (const auto& row : table.rows) {
        std::cout << std::left << std::setw(8) << row.label;
        std::string a;
        for (double x : row.a.coords) a += (a.empty() ? "" : ",") + fixed6(x);
        std::cout << std::setw(20) << a << fixed6(row.ars) << "\n";
      }
      std::cout << "flatten " << fixed6(table.flatten_ars) << "  best-grid "
                << fixed6(table.best_grid_ars) << "  median-grid "
                << fixed6(table.median_grid_ars) << "\n";
      if (!be_out.empty()) emit(be_out, io::dump(io::to_json(table)));
    }
  } catch (const Error& e) {
    std::cerr << "error code=" << to_string(e.code()) << " message=\"" << e.what()
              << "\"\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error code=invalid_argument message=\"" << e.what() << "\"\n";
    return 1;
  } catch (const std::out_of_range& e) {
    std::cerr << "error code=out_of_range message=\"" << e.what() << "\"\n";
    return 1;
  }
  return 0;
}
