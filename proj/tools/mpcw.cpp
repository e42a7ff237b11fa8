#include <CLI11.hpp>

#include "mpcw/certificates.hpp"
#include "mpcw/datagen.hpp"
#include "mpcw/formats.hpp"
#include "mpcw/neural.hpp"
#include "mpcw/planner.hpp"

#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace mpcw;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInfeasible = 2;
constexpr int kExitConfig = 3;
constexpr int kExitNumerical = 4;

struct CommonArgs {
  int sys = 0;
  std::string problem_path;
  std::uint64_t seed = 0;
  std::string out_dir = ".";
  int threads = 0;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--sys", args.sys, "benchmark system id (1..4)")
      ->check(CLI::Range(1, 4));
  cmd->add_option("--problem", args.problem_path, "problem manifest file");
  cmd->add_option("--seed", args.seed, "global seed");
  cmd->add_option("--out", args.out_dir, "output directory");
  cmd->add_option("--threads", args.threads,
                  "worker threads (default: MPC_WARMSTART_THREADS or 1)");
}

int resolve_threads(int flag_value) {
  if (flag_value > 0) return flag_value;
  if (const char* env = std::getenv("MPC_WARMSTART_THREADS")) {
    int v = std::atoi(env);
    if (v > 0) return v;
  }
  return 1;
}

LtiProblemSpec load_spec(const CommonArgs& args) {
  if (args.sys != 0 && !args.problem_path.empty())
    throw ConfigError("--sys and --problem are mutually exclusive");
  if (args.sys != 0) return build_benchmark(static_cast<BenchmarkId>(args.sys));
  if (!args.problem_path.empty()) return load_problem(args.problem_path);
  throw ConfigError("one of --sys or --problem is required");
}

std::vector<Index> parse_widths(const std::string& text) {
  std::vector<Index> widths;
  std::istringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) widths.push_back(std::stoll(tok));
  return widths;
}

std::vector<Termination> parse_criteria(const std::string& text) {
  std::vector<Termination> out;
  std::istringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(parse_criterion(tok));
  return out;
}

// Hash the model by content, not by path, so re-runs into different output
// directories stay byte-identical.
std::string file_bytes(const std::string& path) {
  if (path.empty()) return {};
  std::ifstream in(path, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
}

std::uint64_t config_hash(const std::string& text) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

void ensure_out(const std::string& dir) { fs::create_directories(dir); }

DatasetHeader header_for(const BatchQp& qp) {
  DatasetHeader h;
  h.n = static_cast<std::uint32_t>(qp.n());
  h.d_p = static_cast<std::uint32_t>(qp.d_p());
  h.d_eq = static_cast<std::uint32_t>(qp.d_eq());
  h.d_in = static_cast<std::uint32_t>(qp.d_in());
  return h;
}

int cmd_gen_data(const CommonArgs& common, const std::string& goals,
                 double step_d) {
  LtiProblemSpec spec = load_spec(common);
  BatchQp qp(spec);
  WalkConfig cfg;
  {
    std::istringstream ss(goals);
    std::string tok;
    std::vector<Index> counts;
    while (std::getline(ss, tok, ',')) counts.push_back(std::stoll(tok));
    if (counts.size() != 3) throw ConfigError("--goals expects a,b,c");
    cfg.n_train = counts[0];
    cfg.n_buffer = counts[1];
    cfg.n_test = counts[2];
  }
  cfg.step_d = step_d;
  cfg.seed = common.seed;

  DatasetBundle bundle = generate_data(qp, cfg);
  ensure_out(common.out_dir);
  DatasetHeader h = header_for(qp);
  h.count = static_cast<std::uint32_t>(bundle.train.size());
  write_dataset(bundle.train, h, common.out_dir + "/train.mpcd");
  h.count = static_cast<std::uint32_t>(bundle.test.size());
  write_dataset(bundle.test, h, common.out_dir + "/test.mpcd");

  std::ofstream man(common.out_dir + "/manifest.txt", std::ios::trunc);
  man << "mpcw-dataset-manifest v1\n";
  man << "spec_hash: " << spec_hash(spec) << "\n";
  man << "seed: " << cfg.seed << "\n";
  man << "step_d: " << bundle.config.step_d << "\n";
  man << "goals: " << cfg.n_train << "," << cfg.n_buffer << "," << cfg.n_test
      << "\n";
  man << "train_records: " << bundle.train.size() << "\n";
  man << "test_records: " << bundle.test.size() << "\n";
  man << "empty_walks: " << bundle.empty_walks << "\n";
  man << "generated_at: " << std::time(nullptr) << "\n";

  std::cout << "train records: " << bundle.train.size()
            << "\ntest records: " << bundle.test.size()
            << "\nempty walks: " << bundle.empty_walks
            << "\nstep_d: " << bundle.config.step_d << "\n";
  return kExitOk;
}

int cmd_train(const CommonArgs& common, const std::string& data_path,
              const std::string& widths_text, int epochs, int batch, double lr,
              double val_frac) {
  LtiProblemSpec spec = load_spec(common);
  BatchQp qp(spec);
  auto [header, records] = read_dataset(data_path);
  if (header.d_p != static_cast<std::uint32_t>(qp.d_p()))
    throw ConfigError("dataset dimensions do not match the problem");

  std::vector<Index> widths = widths_text.empty()
                                  ? default_widths(qp.n(), qp.d_p())
                                  : parse_widths(widths_text);
  TrainConfig cfg;
  cfg.epochs = epochs;
  cfg.batch_size = batch;
  cfg.learning_rate = lr;
  cfg.seed = common.seed;
  cfg.validation_fraction = val_frac;
  cfg.threads = resolve_threads(common.threads);

  auto [model, log] = train(records, qp, widths, cfg);
  ensure_out(common.out_dir);
  save_model(model, common.out_dir + "/model.txt", cfg.seed);
  std::ofstream lf(common.out_dir + "/train_log.txt", std::ios::trunc);
  lf << "# epoch train_loss val_loss\n";
  lf.precision(17);
  for (std::size_t e = 0; e < log.train_loss.size(); ++e)
    lf << e << " " << log.train_loss[e] << " " << log.val_loss[e] << "\n";

  std::cout << "initial loss: " << log.train_loss.front()
            << "\nfinal loss: " << log.train_loss.back()
            << "\nfinal val loss: " << log.val_loss.back() << "\n";
  return kExitOk;
}

int cmd_eval_open(const CommonArgs& common, const std::string& data_path,
                  const std::string& model_path, const std::string& criteria) {
  LtiProblemSpec spec = load_spec(common);
  BatchQp qp(spec);
  auto [header, records] = read_dataset(data_path);
  MlpModel model;
  bool have_model = !model_path.empty();
  if (have_model) model = load_model(model_path);

  std::vector<MetricRow> rows =
      open_loop_eval(qp, records, have_model ? &model : nullptr,
                     parse_criteria(criteria), {}, resolve_threads(common.threads));

  ensure_out(common.out_dir);
  std::ostringstream machine;
  machine << "init,criterion,mean_iters,worst_iters,mean_sigma,worst_sigma,"
             "count,excluded\n";
  std::cout << "open-loop metrics over " << records.size() << " records\n";
  for (const auto& r : rows) {
    std::cout << "  " << r.init_mode << " / " << r.criterion
              << ": iters mean " << r.mean_iters << " worst " << r.worst_iters
              << ", sigma mean " << r.mean_sigma << " worst " << r.worst_sigma
              << "\n";
    machine << r.init_mode << "," << r.criterion << "," << r.mean_iters << ","
            << r.worst_iters << "," << r.mean_sigma << "," << r.worst_sigma
            << "," << r.count << "," << r.excluded << "\n";
  }
  std::string hash_line =
      "# config_hash: " + std::to_string(config_hash(criteria + file_bytes(model_path)));
  std::ofstream out(common.out_dir + "/open_loop.csv", std::ios::trunc);
  out << hash_line << "\n" << machine.str();
  return kExitOk;
}

int cmd_eval_closed(const CommonArgs& common, const std::string& data_path,
                    const std::string& model_path, const std::string& criteria,
                    int x0_count, int max_steps) {
  LtiProblemSpec spec = load_spec(common);
  BatchQp qp(spec);
  auto [header, records] = read_dataset(data_path);
  MlpModel model;
  bool have_model = !model_path.empty();
  if (have_model) model = load_model(model_path);

  std::vector<Vec> x0s;
  for (const auto& rec : records) {
    if (static_cast<int>(x0s.size()) >= x0_count) break;
    x0s.push_back(rec.x);
  }

  std::vector<ClosedLoopRow> rows = closed_loop_eval(
      qp, have_model ? &model : nullptr, parse_criteria(criteria), x0s, {},
      max_steps, resolve_threads(common.threads));

  ensure_out(common.out_dir);
  std::ostringstream machine;
  machine << "init,criterion,mean_first_iters,worst_first_iters,"
             "mean_rest_iters,worst_rest_iters,mean_sigma_cl,worst_sigma_cl,"
             "trajectories\n";
  std::cout << "closed-loop metrics over " << x0s.size() << " trajectories\n";
  for (const auto& r : rows) {
    std::cout << "  " << r.init_mode << " / " << r.criterion << ": x0 iters "
              << r.mean_first_iters << " (" << r.worst_first_iters
              << "), rest " << r.mean_rest_iters << " (" << r.worst_rest_iters
              << "), sigma_cl " << r.mean_sigma_cl << " (" << r.worst_sigma_cl
              << ")\n";
    machine << r.init_mode << "," << r.criterion << "," << r.mean_first_iters
            << "," << r.worst_first_iters << "," << r.mean_rest_iters << ","
            << r.worst_rest_iters << "," << r.mean_sigma_cl << ","
            << r.worst_sigma_cl << "," << r.trajectories << "\n";
  }
  std::ofstream out(common.out_dir + "/closed_loop.csv", std::ios::trunc);
  out << "# config_hash: " << config_hash(criteria + file_bytes(model_path)) << "\n"
      << machine.str();
  return kExitOk;
}

int cmd_solve(const CommonArgs& common, const std::string& x_text,
              const std::string& model_path, const std::string& criterion_text,
              bool dump) {
  LtiProblemSpec spec = load_spec(common);
  BatchQp qp(spec);
  Vec x(qp.n());
  {
    std::istringstream ss(x_text);
    std::string tok;
    Index i = 0;
    while (std::getline(ss, tok, ',')) {
      if (i >= qp.n()) throw ConfigError("--x has too many entries");
      x(i++) = std::stod(tok);
    }
    if (i != qp.n()) throw ConfigError("--x has too few entries");
  }
  MlpModel model;
  bool have_model = !model_path.empty();
  if (have_model) model = load_model(model_path);

  PlanResult plan = explicit_implicit_plan(
      qp, x, have_model ? &model : nullptr, parse_criterion(criterion_text));
  if (plan.infeasible) {
    std::cout << "infeasible: x is outside the feasible parameter set\n";
    return kExitInfeasible;
  }
  std::cout.precision(12);
  std::cout << "J: " << qp.objective(plan.z, x) << "\n"
            << "eta: " << plan.eta << "\n"
            << "certified: " << (plan.certified ? "yes" : "no") << "\n"
            << "phase1_iters: " << plan.phase1_iters << "\n"
            << "phase2_iters: " << plan.phase2_iters << "\n";
  if (dump) {
    Certificate cert = certify(qp, plan.z, x);
    std::cout << "z: " << plan.z.transpose() << "\n"
              << "nu: " << cert.nu.transpose() << "\n"
              << "lambda: " << cert.lambda.transpose() << "\n";
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"explicit-implicit MPC pipeline"};
  app.require_subcommand(1);

  CommonArgs common;
  std::string goals = "100,20,20";
  double step_d = 0.0;
  std::string data_path, model_path, widths_text, x_text;
  std::string criteria = "pf,pfsub,gap:0.1,optimal";
  std::string criterion = "optimal";
  int epochs = 100, batch = 128, x0_count = 16, max_steps = 500;
  double lr = 1e-3, val_frac = 0.05;
  bool dump = false;

  auto* gen = app.add_subcommand("gen-data", "generate train/test datasets");
  add_common(gen, common);
  gen->add_option("--goals", goals, "train,buffer,test goal counts");
  gen->add_option("--step-d", step_d, "walk step size");

  auto* tr = app.add_subcommand("train", "train the planner network");
  add_common(tr, common);
  tr->add_option("--data", data_path, "training dataset (.mpcd)")->required();
  tr->add_option("--widths", widths_text, "layer widths, e.g. 2,32,32,30");
  tr->add_option("--epochs", epochs, "training epochs");
  tr->add_option("--batch", batch, "mini-batch size");
  tr->add_option("--lr", lr, "learning rate");
  tr->add_option("--val-frac", val_frac, "validation fraction");

  auto* eo = app.add_subcommand("eval-open", "open-loop metrics");
  add_common(eo, common);
  eo->add_option("--data", data_path, "test dataset (.mpcd)")->required();
  eo->add_option("--model", model_path, "model file");
  eo->add_option("--criteria", criteria, "comma list: pf,pfsub,gap:<t>,optimal");

  auto* ec = app.add_subcommand("eval-closed", "closed-loop metrics");
  add_common(ec, common);
  ec->add_option("--data", data_path, "test dataset for x0 draws")->required();
  ec->add_option("--model", model_path, "model file");
  ec->add_option("--criteria", criteria, "comma list: pf,pfsub,gap:<t>,optimal");
  ec->add_option("--x0-count", x0_count, "number of initial states");
  ec->add_option("--max-steps", max_steps, "simulation step limit");

  auto* so = app.add_subcommand("solve", "solve a single QP(x)");
  add_common(so, common);
  so->add_option("--x", x_text, "initial state, comma separated")->required();
  so->add_option("--warm", model_path, "model file for warm starting");
  so->add_option("--criterion", criterion, "pf | pfsub | gap:<t> | optimal");
  so->add_flag("--dump", dump, "print z, nu, lambda");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (gen->parsed()) return cmd_gen_data(common, goals, step_d);
    if (tr->parsed())
      return cmd_train(common, data_path, widths_text, epochs, batch, lr, val_frac);
    if (eo->parsed()) return cmd_eval_open(common, data_path, model_path, criteria);
    if (ec->parsed())
      return cmd_eval_closed(common, data_path, model_path, criteria, x0_count,
                             max_steps);
    if (so->parsed()) return cmd_solve(common, x_text, model_path, criterion, dump);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << " (byte " << e.byte_offset
              << ")\n";
    return kExitConfig;
  } catch (const InvalidArgument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
  return kExitConfig;
}
