#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "vdkflow/acpf.hpp"
#include "vdkflow/al.hpp"
#include "vdkflow/bench.hpp"
#include "vdkflow/errors.hpp"
#include "vdkflow/gp.hpp"
#include "vdkflow/grid.hpp"
#include "vdkflow/kernels.hpp"
#include "vdkflow/layers.hpp"

namespace {

using nlohmann::json;
using namespace vdkflow;

void emit(const std::string& out_path, const std::string& text) {
  if (out_path.empty()) {
    std::cout << text << '\n';
    return;
  }
  std::ofstream out(out_path);
  if (!out) throw InvalidArgument("cannot open output file " + out_path);
  out << text << '\n';
}

void emit(const std::string& out_path, const json& j) { emit(out_path, j.dump(2)); }

json sample_to_json(const InjectionSample& s) {
  return json{{"p", std::vector<double>(s.p.data(), s.p.data() + s.p.size())},
              {"q", std::vector<double>(s.q.data(), s.q.data() + s.q.size())},
              {"meta",
               {{"distribution", dist_name(s.distribution)},
                {"hypercube_fraction", s.hypercube_fraction},
                {"seed", s.seed}}}};
}

InjectionSample sample_from_json(const json& j) {
  InjectionSample s;
  const auto p = j.at("p").get<std::vector<double>>();
  const auto q = j.at("q").get<std::vector<double>>();
  s.p = Eigen::Map<const Eigen::VectorXd>(p.data(), static_cast<int>(p.size()));
  s.q = Eigen::Map<const Eigen::VectorXd>(q.data(), static_cast<int>(q.size()));
  if (j.contains("meta")) {
    const auto& m = j.at("meta");
    s.distribution = parse_dist(m.value("distribution", "uniform"));
    s.hypercube_fraction = m.value("hypercube_fraction", 0.0);
    s.seed = m.value("seed", std::uint64_t{0});
  }
  return s;
}

std::vector<InjectionSample> read_samples(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open samples file " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw InvalidArgument("samples file is not valid JSON: " + std::string(e.what()));
  }
  if (!j.is_array()) throw InvalidArgument("samples file must hold a JSON array");
  std::vector<InjectionSample> out;
  for (const auto& sj : j) out.push_back(sample_from_json(sj));
  if (out.empty()) throw EmptyInput("samples file holds no samples");
  return out;
}

Method parse_method(const std::string& name) {
  if (name == "full_gp") return Method::full_gp;
  if (name == "vdk_gp") return Method::vdk_gp;
  if (name == "vdk_al") return Method::vdk_al;
  throw InvalidArgument("unknown method '" + name + "' (full_gp, vdk_gp, vdk_al)");
}

KernelVariant parse_variant(const std::string& name) {
  if (name == "full") return KernelVariant::full;
  if (name == "vdk") return KernelVariant::vdk;
  if (name == "vdk_reduced") return KernelVariant::vdk_reduced;
  if (name == "vdk_depth") return KernelVariant::vdk_depth;
  throw InvalidArgument("unknown kernel variant '" + name +
                        "' (full, vdk, vdk_reduced, vdk_depth)");
}

void require_keys(const json& j, const std::vector<std::string>& allowed,
                  const std::string& where) {
  for (const auto& [key, value] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      throw InvalidArgument("unknown key '" + key + "' in " + where);
  }
}

ExperimentConfig config_from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open config file " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw InvalidArgument("config file is not valid JSON: " + std::string(e.what()));
  }
  require_keys(j,
               {"case", "target", "fraction", "n_train", "n_test", "n_trials", "method",
                "variant", "depth", "train_dist", "test_dist", "master_seed", "out", "al",
                "fit", "solve"},
               "config");
  ExperimentConfig cfg;
  cfg.case_path = j.value("case", cfg.case_path);
  cfg.target_bus = j.value("target", cfg.target_bus);
  cfg.fraction = j.value("fraction", cfg.fraction);
  cfg.n_train = j.value("n_train", cfg.n_train);
  cfg.n_test = j.value("n_test", cfg.n_test);
  cfg.n_trials = j.value("n_trials", cfg.n_trials);
  if (j.contains("method")) cfg.method = parse_method(j["method"].get<std::string>());
  if (j.contains("variant")) cfg.variant = parse_variant(j["variant"].get<std::string>());
  cfg.depth = j.value("depth", cfg.depth);
  if (j.contains("train_dist")) cfg.train_dist = parse_dist(j["train_dist"].get<std::string>());
  if (j.contains("test_dist")) cfg.test_dist = parse_dist(j["test_dist"].get<std::string>());
  cfg.master_seed = j.value("master_seed", cfg.master_seed);
  cfg.out_path = j.value("out", cfg.out_path);
  if (j.contains("al")) {
    const auto& a = j["al"];
    require_keys(a, {"swipes_per_iter", "batch", "retune_every", "retune_iters", "max_redraws"},
                 "config.al");
    cfg.al.swipes_per_iter = a.value("swipes_per_iter", cfg.al.swipes_per_iter);
    cfg.al.batch = a.value("batch", cfg.al.batch);
    cfg.al.retune_every = a.value("retune_every", cfg.al.retune_every);
    cfg.al.retune_iters = a.value("retune_iters", cfg.al.retune_iters);
    cfg.al.max_redraws = a.value("max_redraws", cfg.al.max_redraws);
  }
  if (j.contains("fit")) {
    const auto& f = j["fit"];
    require_keys(f, {"lr", "iters", "noise", "learn_noise"}, "config.fit");
    cfg.fit.lr = f.value("lr", cfg.fit.lr);
    cfg.fit.iters = f.value("iters", cfg.fit.iters);
    cfg.fit.noise = f.value("noise", cfg.fit.noise);
    cfg.fit.learn_noise = f.value("learn_noise", cfg.fit.learn_noise);
  }
  if (j.contains("solve")) {
    const auto& s = j["solve"];
    require_keys(s, {"tol", "max_iter", "flat_start", "enforce_q_limits"}, "config.solve");
    cfg.solve.tol = s.value("tol", cfg.solve.tol);
    cfg.solve.max_iter = s.value("max_iter", cfg.solve.max_iter);
    cfg.solve.flat_start = s.value("flat_start", cfg.solve.flat_start);
    cfg.solve.enforce_q_limits = s.value("enforce_q_limits", cfg.solve.enforce_q_limits);
  }
  return cfg;
}

// Fit a model on labeled samples drawn fresh from the box (shared by the gp
// and bench subcommands).
GpModel fit_fresh(const Network& net, int target, double fraction, int n_train,
                  SampleDist dist, std::uint64_t seed, const FitOptions& fit_opts,
                  const SolveOptions& solve_opts) {
  const auto raw = sample_hypercube(net, fraction, n_train, dist, seed);
  LabelOptions lo;
  lo.solve = solve_opts;
  const auto labeled = label_samples(net, raw, target, lo);
  Eigen::MatrixXd x(2 * net.size(), static_cast<int>(labeled.size()));
  Eigen::VectorXd y(static_cast<int>(labeled.size()));
  for (int i = 0; i < static_cast<int>(labeled.size()); ++i) {
    x.col(i) = flatten(labeled[i].input);
    y[i] = labeled[i].v_target;
  }
  VdkStructure kernel = build_vdk(net);
  kernel = reduce_vdk(kernel);
  FitOptions fo = fit_opts;
  fo.box = hypercube_box(net, fraction);
  return fit(x, y, kernel, fo);
}

std::string model_sibling_path(const std::string& out_path) {
  const std::string suffix = ".json";
  if (out_path.size() > suffix.size() &&
      out_path.compare(out_path.size() - suffix.size(), suffix.size(), suffix) == 0)
    return out_path.substr(0, out_path.size() - suffix.size()) + ".model.json";
  return out_path + ".model.json";
}

json metrics_json(const Metrics& m) {
  return json{{"mae", m.mae}, {"me", m.me}, {"mpv", m.mpv}};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"voltage-magnitude surrogates for AC grids: graph-structured GP kernels,\n"
               "a Newton-Raphson power-flow oracle, and network-swipe active learning"};
  app.require_subcommand(1);

  // Shared option storage; a flag given on any level lands here.
  std::string g_case, g_out, g_config;
  std::uint64_t g_seed = 0;
  app.add_option("--config", g_config, "JSON experiment config (bench trials)");
  app.add_option("--seed", g_seed, "master RNG seed");
  app.add_option("--out", g_out, "output file (default: stdout)");

  // ---- grid ----
  auto* grid_cmd = app.add_subcommand("grid", "case parsing and inspection");
  grid_cmd->require_subcommand(1);
  auto* grid_dump = grid_cmd->add_subcommand("dump", "parse a case file and dump the model");
  grid_dump->add_option("--case", g_case, "MATPOWER-style case file")->required();
  grid_dump->add_option("--out", g_out, "output file");
  grid_dump->callback([&] { emit(g_out, dump_json(load_case(g_case))); });

  // ---- acpf ----
  auto* acpf_cmd = app.add_subcommand("acpf", "power-flow solves and injection sampling");
  acpf_cmd->require_subcommand(1);

  auto* acpf_solve = acpf_cmd->add_subcommand("solve", "Newton-Raphson solve at base load");
  double scale_load = 1.0;
  SolveOptions cli_solve;
  acpf_solve->add_option("--case", g_case)->required();
  acpf_solve->add_option("--scale-load", scale_load, "multiply every base load by this factor");
  acpf_solve->add_option("--tol", cli_solve.tol, "mismatch tolerance, pu");
  acpf_solve->add_option("--max-iter", cli_solve.max_iter);
  acpf_solve->add_flag("--flat-start", cli_solve.flat_start,
                       "start from setpoints instead of the stored profile");
  acpf_solve->add_flag("--q-limits", cli_solve.enforce_q_limits,
                       "enforce generator reactive limits by PV->PQ switching");
  acpf_solve->add_option("--out", g_out);
  acpf_solve->callback([&] {
    const Network net = load_case(g_case);
    InjectionSample s = base_injection(net);
    for (int i = 0; i < net.size(); ++i) {
      s.p[i] -= (scale_load - 1.0) * net.buses[i].p_load_mw / net.base_mva;
      s.q[i] -= (scale_load - 1.0) * net.buses[i].q_load_mvar / net.base_mva;
    }
    const PowerFlowSolution sol = solve_acpf(net, s, cli_solve);
    json out{{"iterations", sol.iterations},
             {"max_mismatch", sol.max_mismatch},
             {"residual", mismatch_residual(net, s, sol)},
             {"v_mag", std::vector<double>(sol.v_mag.data(), sol.v_mag.data() + sol.v_mag.size())},
             {"v_ang", std::vector<double>(sol.v_ang.data(), sol.v_ang.data() + sol.v_ang.size())}};
    emit(g_out, out);
  });

  auto* acpf_sample = acpf_cmd->add_subcommand("sample", "draw injection samples in a hypercube");
  double cli_fraction = 0.10;
  int cli_n = 100;
  std::string cli_dist = "uniform";
  acpf_sample->add_option("--case", g_case)->required();
  acpf_sample->add_option("--fraction", cli_fraction, "hypercube half-width fraction");
  acpf_sample->add_option("--n", cli_n, "number of samples");
  acpf_sample->add_option("--seed", g_seed);
  acpf_sample->add_option("--dist", cli_dist, "uniform | normal | beta");
  acpf_sample->add_option("--out", g_out);
  acpf_sample->callback([&] {
    const Network net = load_case(g_case);
    const auto samples =
        sample_hypercube(net, cli_fraction, cli_n, parse_dist(cli_dist), g_seed);
    json arr = json::array();
    for (const auto& s : samples) arr.push_back(sample_to_json(s));
    emit(g_out, arr);
  });

  // ---- kernel ----
  auto* kernel_cmd = app.add_subcommand("kernel", "vertex-degree kernel structure");
  kernel_cmd->require_subcommand(1);
  auto* kernel_build = kernel_cmd->add_subcommand("build", "emit NNK structure as JSON");
  bool cli_reduce = false;
  kernel_build->add_option("--case", g_case)->required();
  kernel_build->add_flag("--reduce", cli_reduce, "remove subset-redundant NNKs");
  kernel_build->add_option("--out", g_out);
  kernel_build->callback([&] {
    const Network net = load_case(g_case);
    VdkStructure v = build_vdk(net);
    if (cli_reduce) v = reduce_vdk(v);
    emit(g_out, dump_vdk_json(v));
  });

  // ---- gp ----
  auto* gp_cmd = app.add_subcommand("gp", "Gaussian-process fit and prediction");
  gp_cmd->require_subcommand(1);

  auto* gp_fit = gp_cmd->add_subcommand("fit", "sample, label and fit a model");
  int cli_target = 1;
  FitOptions cli_fit;
  std::string cli_samples;
  gp_fit->add_option("--case", g_case)->required();
  gp_fit->add_option("--target", cli_target, "external bus number")->required();
  gp_fit->add_option("--fraction", cli_fraction);
  gp_fit->add_option("--n", cli_n, "training samples");
  gp_fit->add_option("--seed", g_seed);
  gp_fit->add_option("--dist", cli_dist);
  gp_fit->add_option("--samples", cli_samples, "JSON samples file (instead of drawing)");
  gp_fit->add_option("--iters", cli_fit.iters, "likelihood-ascent iterations");
  gp_fit->add_option("--lr", cli_fit.lr);
  gp_fit->add_option("--noise", cli_fit.noise);
  gp_fit->add_option("--out", g_out, "model file")->required();
  gp_fit->callback([&] {
    const Network net = load_case(g_case);
    const int target = net.index_of(cli_target);
    GpModel model;
    if (cli_samples.empty()) {
      model = fit_fresh(net, target, cli_fraction, cli_n, parse_dist(cli_dist), g_seed,
                        cli_fit, SolveOptions{});
    } else {
      const auto raw = read_samples(cli_samples);
      const auto labeled = label_samples(net, raw, target, LabelOptions{});
      Eigen::MatrixXd x(2 * net.size(), static_cast<int>(labeled.size()));
      Eigen::VectorXd y(static_cast<int>(labeled.size()));
      for (int i = 0; i < static_cast<int>(labeled.size()); ++i) {
        x.col(i) = flatten(labeled[i].input);
        y[i] = labeled[i].v_target;
      }
      VdkStructure kernel = build_vdk(net);
      kernel = reduce_vdk(kernel);
      FitOptions fo = cli_fit;
      fo.box = hypercube_box(net, cli_fraction);
      model = fit(x, y, kernel, fo);
    }
    save_model(g_out, model);
    json summary{{"model", g_out},
                 {"n_train", model.size()},
                 {"noise", model.noise},
                 {"lml", log_marginal_likelihood(model)}};
    std::cout << summary.dump(2) << '\n';
  });

  auto* gp_predict = gp_cmd->add_subcommand("predict", "predict at stored samples");
  std::string cli_model;
  gp_predict->add_option("--model", cli_model, "model file from gp fit")->required();
  gp_predict->add_option("--samples", cli_samples, "JSON samples file")->required();
  gp_predict->add_option("--out", g_out);
  gp_predict->callback([&] {
    const GpModel model = load_model(cli_model);
    const auto samples = read_samples(cli_samples);
    json arr = json::array();
    for (const auto& s : samples) {
      const Eigen::VectorXd x = flatten(s);
      arr.push_back({{"mean", predict_mean(model, x)}, {"var", predict_var(model, x)}});
    }
    emit(g_out, arr);
  });

  // ---- al ----
  auto* al_cmd = app.add_subcommand("al", "network-swipe active learning");
  al_cmd->require_subcommand(1);
  auto* al_run = al_cmd->add_subcommand("run", "run the active-learning loop");
  AlOptions cli_al;
  int cli_budget = 100;
  al_run->add_option("--case", g_case)->required();
  al_run->add_option("--target", cli_target, "external bus number")->required();
  al_run->add_option("--budget", cli_budget, "total oracle solves");
  al_run->add_option("--batch", cli_al.batch, "candidates per layer");
  al_run->add_option("--swipes", cli_al.swipes_per_iter, "swipes per iteration");
  al_run->add_option("--retune-every", cli_al.retune_every, "0 disables re-tuning");
  al_run->add_option("--retune-iters", cli_al.retune_iters);
  al_run->add_option("--fraction", cli_al.fraction);
  al_run->add_option("--seed", g_seed);
  al_run->add_option("--out", g_out, "history JSON; model lands next to it");
  al_run->callback([&] {
    const Network net = load_case(g_case);
    cli_al.seed = g_seed;
    auto [model, hist] = run_al(net, net.index_of(cli_target), cli_budget, cli_al);
    json records = json::array();
    for (const auto& r : hist.records) {
      json rec{{"sigma", r.sigma},   {"label", r.label},   {"mae", r.mae},
               {"me", r.me},         {"mpv", r.mpv},       {"retuned", r.retuned},
               {"wall_s", r.wall_s}, {"chosen", sample_to_json(r.chosen)}};
      records.push_back(std::move(rec));
    }
    json out{{"records", std::move(records)},
             {"solver_calls", hist.solver_calls},
             {"redraws", hist.redraws},
             {"model", nullptr}};
    if (!g_out.empty()) {
      const std::string model_path = model_sibling_path(g_out);
      save_model(model_path, model);
      out["model"] = model_path;
    }
    emit(g_out, out);
  });

  // ---- bench ----
  auto* bench_cmd = app.add_subcommand("bench", "experiment protocols");
  bench_cmd->require_subcommand(1);

  auto* bt = bench_cmd->add_subcommand("trials", "independent random train/test trials");
  std::string cli_method = "vdk_gp", cli_variant = "vdk_reduced", cli_test_dist = "uniform";
  int cli_trials = 20, cli_train = 100, cli_test = 1000, cli_depth = 0;
  bt->add_option("--config", g_config, "JSON config; explicit flags override");
  bt->add_option("--case", g_case);
  bt->add_option("--target", cli_target);
  bt->add_option("--method", cli_method, "full_gp | vdk_gp | vdk_al");
  bt->add_option("--variant", cli_variant, "full | vdk | vdk_reduced | vdk_depth");
  bt->add_option("--depth", cli_depth, "kernel truncation depth for vdk_depth");
  bt->add_option("--trials", cli_trials);
  bt->add_option("--train", cli_train);
  bt->add_option("--test", cli_test);
  bt->add_option("--fraction", cli_fraction);
  bt->add_option("--train-dist", cli_dist);
  bt->add_option("--test-dist", cli_test_dist);
  bt->add_option("--seed", g_seed);
  bt->add_option("--out", g_out, "CSV path");
  bt->callback([&] {
    ExperimentConfig cfg;
    if (!g_config.empty()) cfg = config_from_file(g_config);
    auto maybe = [&](const char* name) { return bt->count(name) > 0; };
    if (maybe("--case")) cfg.case_path = g_case;
    if (maybe("--target")) cfg.target_bus = cli_target;
    if (maybe("--method") || g_config.empty()) cfg.method = parse_method(cli_method);
    if (maybe("--variant") || g_config.empty()) cfg.variant = parse_variant(cli_variant);
    if (maybe("--depth")) cfg.depth = cli_depth;
    if (maybe("--trials")) cfg.n_trials = cli_trials;
    if (maybe("--train")) cfg.n_train = cli_train;
    if (maybe("--test")) cfg.n_test = cli_test;
    if (maybe("--fraction")) cfg.fraction = cli_fraction;
    if (maybe("--train-dist")) cfg.train_dist = parse_dist(cli_dist);
    if (maybe("--test-dist")) cfg.test_dist = parse_dist(cli_test_dist);
    if (maybe("--seed")) cfg.master_seed = g_seed;
    if (maybe("--out")) cfg.out_path = g_out;
    if (cfg.case_path.empty())
      throw InvalidArgument("no case file given (--case or config 'case')");

    const auto rows = run_trials(cfg);
    std::vector<double> maes;
    for (const auto& r : rows) maes.push_back(r.m.mae);
    std::sort(maes.begin(), maes.end());
    const double median = maes.size() % 2 == 1
                              ? maes[maes.size() / 2]
                              : 0.5 * (maes[maes.size() / 2 - 1] + maes[maes.size() / 2]);
    json summary{{"trials", rows.size()},
                 {"median_mae", median},
                 {"csv", cfg.out_path.empty() ? json(nullptr) : json(cfg.out_path)}};
    if (cfg.out_path.empty()) {
      std::string text = kCsvHeader;
      for (const auto& r : rows) text += "\n" + csv_row(r);
      std::cout << text << '\n';
    }
    std::cout << summary.dump(2) << '\n';
  });

  auto* bd = bench_cmd->add_subcommand("depth", "kernel depth-truncation study");
  std::vector<int> cli_depths;
  bd->add_option("--case", g_case)->required();
  bd->add_option("--target", cli_target)->required();
  bd->add_option("--depths", cli_depths, "depths to evaluate (default: 1..d)")->delimiter(',');
  bd->add_option("--train", cli_train);
  bd->add_option("--test", cli_test);
  bd->add_option("--fraction", cli_fraction);
  bd->add_option("--iters", cli_fit.iters);
  bd->add_option("--seed", g_seed);
  bd->add_option("--out", g_out);
  bd->callback([&] {
    const Network net = load_case(g_case);
    const int target = net.index_of(cli_target);
    std::vector<int> depths = cli_depths;
    if (depths.empty()) {
      const int d = build_layers(net, target).depth();
      for (int k = 1; k <= d; ++k) depths.push_back(k);
    }
    ExperimentConfig cfg;
    cfg.case_path = g_case;
    cfg.target_bus = cli_target;
    cfg.fraction = cli_fraction;
    cfg.n_train = cli_train;
    cfg.n_test = cli_test;
    cfg.fit = cli_fit;
    cfg.master_seed = g_seed;
    json arr = json::array();
    for (const auto& p : depth_study(net, target, depths, cfg))
      arr.push_back({{"depth", p.depth},
                     {"n_active", p.n_active},
                     {"metrics", metrics_json(p.m)}});
    emit(g_out, arr);
  });

  auto* bu = bench_cmd->add_subcommand("uq", "distribution-shift uncertainty quantification");
  std::vector<std::string> cli_dists{"normal", "beta"};
  bu->add_option("--case", g_case)->required();
  bu->add_option("--target", cli_target)->required();
  bu->add_option("--dists", cli_dists, "test distributions")->delimiter(',');
  bu->add_option("--train", cli_train);
  bu->add_option("--test", cli_test);
  bu->add_option("--fraction", cli_fraction);
  bu->add_option("--iters", cli_fit.iters);
  bu->add_option("--seed", g_seed);
  bu->add_option("--out", g_out);
  bu->callback([&] {
    const Network net = load_case(g_case);
    const int target = net.index_of(cli_target);
    const GpModel model =
        fit_fresh(net, target, cli_fraction, cli_train, SampleDist::uniform,
                  derive_seed(g_seed, 0), cli_fit, SolveOptions{});
    std::vector<SampleDist> dists;
    for (const auto& d : cli_dists) dists.push_back(parse_dist(d));
    json arr = json::array();
    for (const auto& r : uq_study(model, net, target, cli_fraction, dists, cli_test,
                                  derive_seed(g_seed, 1))) {
      arr.push_back(
          {{"distribution", dist_name(r.distribution)},
           {"kl", r.kl},
           {"bandwidth_truth", r.truth.bandwidth},
           {"bandwidth_predicted", r.predicted.bandwidth},
           {"grid", std::vector<double>(r.truth.grid.data(),
                                        r.truth.grid.data() + r.truth.grid.size())},
           {"density_truth",
            std::vector<double>(r.truth.density.data(),
                                r.truth.density.data() + r.truth.density.size())},
           {"density_predicted",
            std::vector<double>(r.predicted.density.data(),
                                r.predicted.density.data() + r.predicted.density.size())}});
    }
    emit(g_out, arr);
  });

  auto* be = bench_cmd->add_subcommand("extrapolate", "test on wider boxes than training");
  double cli_train_fraction = 0.10;
  std::vector<double> cli_test_fractions{0.10, 0.15, 0.20, 0.25};
  be->add_option("--case", g_case)->required();
  be->add_option("--target", cli_target)->required();
  be->add_option("--train-fraction", cli_train_fraction);
  be->add_option("--test-fractions", cli_test_fractions)->delimiter(',');
  be->add_option("--train", cli_train);
  be->add_option("--test", cli_test);
  be->add_option("--iters", cli_fit.iters);
  be->add_option("--seed", g_seed);
  be->add_option("--out", g_out);
  be->callback([&] {
    const Network net = load_case(g_case);
    const int target = net.index_of(cli_target);
    const GpModel model =
        fit_fresh(net, target, cli_train_fraction, cli_train, SampleDist::uniform,
                  derive_seed(g_seed, 0), cli_fit, SolveOptions{});
    json arr = json::array();
    for (const auto& p : extrapolation_study(model, net, target, cli_train_fraction,
                                             cli_test_fractions, cli_test,
                                             derive_seed(g_seed, 1)))
      arr.push_back({{"fraction", p.fraction},
                     {"n_test", p.n_test},
                     {"metrics", metrics_json(p.m)}});
    emit(g_out, arr);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    json err{{"code", "cli_parse"}, {"message", e.what()}};
    std::cerr << err.dump() << '\n';
    return 2;
  } catch (const Error& e) {
    json err{{"code", e.code()}, {"message", e.what()}};
    std::cerr << err.dump() << '\n';
    return 1;
  } catch (const std::exception& e) {
    json err{{"code", "internal_error"}, {"message", e.what()}};
    std::cerr << err.dump() << '\n';
    return 3;
  }
  return 0;
}
