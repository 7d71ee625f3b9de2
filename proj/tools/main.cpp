// Command-line front end: train / compare / eval / dump-config.
//
// Exit codes: 0 success, 1 numeric failure during a run, 2 usage or
// config/format errors.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "tsrl/config.hpp"
#include "tsrl/csv.hpp"
#include "tsrl/metrics.hpp"
#include "tsrl/orchestrator.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
  std::optional<std::string> mode;
  std::optional<std::uint64_t> seed;
};

fs::path output_root(const std::string& out_dir) {
  if (!out_dir.empty()) return fs::path(out_dir);
  if (const char* env = std::getenv("TSRL_OUT")) return fs::path(env);
  return fs::path("runs");
}

tsrl::RunConfig resolve_config(const CommonArgs& args) {
  tsrl::RunConfig config;
  if (!args.config_path.empty()) {
    config = tsrl::load_run_config(args.config_path);
  }
  if (args.mode) config.mode = tsrl::run_mode_from_name(*args.mode);
  if (args.seed) config.seed = *args.seed;
  config.validate();
  return config;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << text;
}

int run_train(const CommonArgs& args, bool dump_registry, bool dump_data) {
  const tsrl::RunConfig config = resolve_config(args);
  const fs::path dir =
      output_root(args.out_dir) / tsrl::run_dir_name(config.mode, config.seed);
  fs::create_directories(dir);

  tsrl::TrainHooks hooks;
  if (dump_registry) {
    hooks.after_epoch = [dir](int epoch, const tsrl::Registry& registry) {
      char name[64];
      std::snprintf(name, sizeof(name), "registry_epoch_%03d.csv", epoch);
      std::ofstream os(dir / name, std::ios::binary);
      tsrl::dump_registry_csv(registry, os);
    };
  }
  const tsrl::RunArtifacts artifacts = tsrl::train(config, hooks);
  tsrl::WriteOptions options;
  options.dump_train_dataset = dump_data;
  tsrl::write_run_artifacts(dir, config, artifacts, options);
  std::cout << "wrote " << (dir / "metrics.csv").string() << "\n";
  return 0;
}

int run_compare(const CommonArgs& args, const std::vector<std::uint64_t>& seeds) {
  if (seeds.empty()) throw std::invalid_argument("compare needs at least one seed");
  const tsrl::RunConfig base = resolve_config(args);
  const fs::path root = output_root(args.out_dir);
  fs::create_directories(root);

  const tsrl::RunMode modes[] = {tsrl::RunMode::kBaseline, tsrl::RunMode::kCl,
                                 tsrl::RunMode::kTsrl};
  bool any_failed = false;
  std::ostringstream comparison;
  comparison << "mode,seed,epoch,hard_fraction,auc_shift\n";
  json summary;
  summary["seeds"] = seeds;
  summary["n_total_epochs"] = base.n_total_epochs;

  for (const tsrl::RunMode mode : modes) {
    std::vector<double> final_auc, final_acc, final_eer, final_hard;
    for (const std::uint64_t seed : seeds) {
      tsrl::RunConfig config = base;
      config.mode = mode;
      config.seed = seed;
      const fs::path dir = root / tsrl::run_dir_name(mode, seed);
      try {
        const tsrl::RunArtifacts artifacts = tsrl::train(config);
        tsrl::write_run_artifacts(dir, config, artifacts);
        for (const auto& row : artifacts.rows) {
          comparison << tsrl::run_mode_name(mode) << ',' << seed << ',' << row.epoch << ','
                     << tsrl::format_double(row.hard_fraction) << ','
                     << tsrl::format_double(row.auc_shift) << '\n';
        }
        final_auc.push_back(artifacts.summary.final_shift.auc);
        final_acc.push_back(artifacts.summary.final_shift.acc);
        final_eer.push_back(artifacts.summary.final_shift.eer);
        final_hard.push_back(artifacts.summary.final_hard_fraction);
      } catch (const std::exception& e) {
        any_failed = true;
        fs::create_directories(dir);
        write_text(dir / "FAILED", std::string(e.what()) + "\n");
        std::cerr << "run " << tsrl::run_dir_name(mode, seed) << " failed: " << e.what()
                  << "\n";
      }
    }
    auto stats = [](const std::vector<double>& v) {
      json s;
      if (v.empty()) {
        s["mean"] = nullptr;
        s["std"] = nullptr;
        return s;
      }
      double mean = 0.0;
      for (double x : v) mean += x;
      mean /= static_cast<double>(v.size());
      double var = 0.0;
      for (double x : v) var += (x - mean) * (x - mean);
      const double sd = v.size() > 1 ? std::sqrt(var / (static_cast<double>(v.size()) - 1.0)) : 0.0;
      s["mean"] = mean;
      s["std"] = sd;
      return s;
    };
    json mode_summary;
    mode_summary["final_auc_shift"] = stats(final_auc);
    mode_summary["final_acc_shift"] = stats(final_acc);
    mode_summary["final_eer_shift"] = stats(final_eer);
    mode_summary["final_hard_fraction"] = stats(final_hard);
    mode_summary["completed_runs"] = final_auc.size();
    summary[tsrl::run_mode_name(mode)] = mode_summary;
  }

  write_text(root / "comparison.csv", comparison.str());
  write_text(root / "comparison_summary.json", summary.dump(2) + "\n");
  std::cout << "wrote " << (root / "comparison.csv").string() << "\n";
  return any_failed ? 1 : 0;
}

int run_eval(const std::string& checkpoint_path, const std::string& data_path) {
  std::ifstream net_is(checkpoint_path, std::ios::binary);
  if (!net_is) throw std::invalid_argument("cannot read checkpoint: " + checkpoint_path);
  const tsrl::DenseNet net = tsrl::DenseNet::load(net_is);

  std::ifstream data_is(data_path, std::ios::binary);
  if (!data_is) throw std::invalid_argument("cannot read dataset: " + data_path);
  const tsrl::LabeledDataset data = tsrl::load_dataset_csv(data_is);
  if (data.inputs.cols() != net.input_dim()) {
    throw std::invalid_argument("dataset width does not match checkpoint input dimension");
  }

  const tsrl::StudentOutput out = tsrl::student_forward(net, data.inputs);
  std::vector<double> scores(data.size());
  for (int i = 0; i < data.size(); ++i) scores[i] = out.probabilities(i, 1);

  json j;
  j["auc"] = tsrl::auc(scores, data.labels);
  j["acc"] = tsrl::accuracy(scores, data.labels);
  j["eer"] = tsrl::eer(scores, data.labels);
  j["n"] = data.size();
  std::cout << j.dump() << "\n";
  return 0;
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    seeds.push_back(std::strtoull(item.c_str(), nullptr, 10));
  }
  return seeds;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tutor-guided sample re-weighting trainer"};
  app.require_subcommand(1);

  CommonArgs args;
  bool dump_registry = false;
  bool dump_data = false;
  std::string seeds_text;
  std::string checkpoint_path;
  std::string data_path;

  auto add_common = [&](CLI::App* cmd, bool with_out) {
    cmd->add_option("--config", args.config_path, "JSON config file (all fields default)");
    cmd->add_option("--mode", args.mode, "Override mode: baseline|cl|tsrl");
    cmd->add_option("--seed", args.seed, "Override run seed");
    if (with_out) {
      cmd->add_option("--out", args.out_dir, "Output root (default $TSRL_OUT or ./runs)");
    }
  };

  CLI::App* train_cmd = app.add_subcommand("train", "Run one training configuration");
  add_common(train_cmd, true);
  train_cmd->add_flag("--dump-registry", dump_registry, "Write per-epoch registry CSVs");
  train_cmd->add_flag("--dump-data", dump_data, "Also write the training split CSV");

  CLI::App* compare_cmd =
      app.add_subcommand("compare", "Run baseline/cl/tsrl over a list of seeds");
  add_common(compare_cmd, true);
  compare_cmd->add_option("--seeds", seeds_text, "Comma-separated seed list")->required();

  CLI::App* eval_cmd = app.add_subcommand("eval", "Score a checkpoint on a dataset CSV");
  eval_cmd->add_option("--checkpoint", checkpoint_path, "TSRL-NET v1 file")->required();
  eval_cmd->add_option("--data", data_path, "Dataset CSV (id,label,tag,x0..)")->required();

  CLI::App* dump_cmd = app.add_subcommand("dump-config", "Print the fully resolved config");
  add_common(dump_cmd, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (train_cmd->parsed()) return run_train(args, dump_registry, dump_data);
    if (compare_cmd->parsed()) return run_compare(args, parse_seed_list(seeds_text));
    if (eval_cmd->parsed()) return run_eval(checkpoint_path, data_path);
    if (dump_cmd->parsed()) {
      std::cout << tsrl::run_config_to_json_string(resolve_config(args)) << "\n";
      return 0;
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
