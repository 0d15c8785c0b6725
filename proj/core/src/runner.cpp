#include "reinitlab/runner.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "reinitlab/errors.hpp"

namespace reinitlab {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

[[noreturn]] void field_error(const std::string& where, const std::string& what) {
  throw ConfigError("config field '" + where + "': " + what);
}

template <typename T>
T get_field(const json& j, const std::string& section, const std::string& key, T fallback) {
  if (!j.contains(key)) {
    return fallback;
  }
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    field_error(section + "." + key, e.what());
  }
}

std::string format_alpha(double alpha) {
  std::ostringstream os;
  os.precision(4);
  os << alpha;
  std::string s = os.str();
  for (char& c : s) {
    if (c == '.') c = '_';
  }
  return s;
}

std::string format_num(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  std::string s = os.str();
  for (char& c : s) {
    if (c == '.') c = '_';
  }
  return s;
}

}  // namespace

MatrixConfig parse_matrix_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }

  MatrixConfig cfg;

  const json arch = j.value("arch", json::object());
  cfg.arch = ArchPreset::by_name(get_field<std::string>(arch, "arch", "name", "MLP_SYNTH"));
  cfg.arch.initializer =
      init_kind_from_string(get_field<std::string>(arch, "arch", "initializer", "he_normal"));
  cfg.arch.dropout = get_field<double>(arch, "arch", "dropout", 0.0);
  if (cfg.arch.dropout < 0.0 || cfg.arch.dropout >= 1.0) {
    field_error("arch.dropout", "must lie in [0, 1)");
  }

  const json data = j.value("data", json::object());
  cfg.data.kind = get_field<std::string>(data, "data", "kind", "synthetic");
  if (cfg.data.kind != "synthetic" && cfg.data.kind != "synthetic_images") {
    field_error("data.kind", "expected synthetic or synthetic_images");
  }
  cfg.data.n_train = get_field<int>(data, "data", "n_train", 256);
  cfg.data.n_test = get_field<int>(data, "data", "n_test", cfg.data.kind == "synthetic" ? 2048 : 1024);
  cfg.data.dim = get_field<int>(data, "data", "dim", 128);
  cfg.data.hw = get_field<int>(data, "data", "hw", 16);
  cfg.data.channels = get_field<int>(data, "data", "channels", 3);
  cfg.data.patch = get_field<int>(data, "data", "patch", 4);

  const json train = j.value("train", json::object());
  cfg.train.learning_rate = get_field<double>(train, "train", "learning_rate", 0.05);
  cfg.train.momentum = get_field<double>(train, "train", "momentum", 0.0);
  // per-run weight decay comes from matrix.penalties
  if (train.contains("batch_size")) {
    if (train["batch_size"].is_string()) {
      if (train["batch_size"].get<std::string>() != "full") {
        field_error("train.batch_size", "expected an integer or \"full\"");
      }
      cfg.train.batch_size = kFullBatch;
    } else {
      cfg.train.batch_size = get_field<int>(train, "train", "batch_size", kFullBatch);
    }
  }
  cfg.train.plateau_patience_epochs = get_field<int>(train, "train", "plateau_patience_epochs", 20);
  cfg.train.plateau_factor = get_field<double>(train, "train", "plateau_factor", 0.5);
  cfg.train.val_fraction = get_field<double>(train, "train", "val_fraction", 0.0);
  cfg.train.early_stop = get_field<bool>(train, "train", "early_stop", false);

  const json plan = j.value("plan", json::object());
  cfg.plan.feature_blocks = get_field<int>(plan, "plan", "blocks", 3);
  cfg.plan.reps = get_field<int>(plan, "plan", "reps", 3);
  cfg.plan.steps_per_round = get_field<int>(plan, "plan", "steps_per_round", 200);
  cfg.plan.rho = get_field<double>(plan, "plan", "rho", 0.2);
  const std::string schedule = get_field<std::string>(plan, "plan", "schedule", "main");
  if (schedule == "main") {
    cfg.plan.variant = ScheduleVariant::Main;
  } else if (schedule == "appendix_a") {
    cfg.plan.variant = ScheduleVariant::AppendixA;
  } else {
    field_error("plan.schedule", "expected main or appendix_a");
  }
  const json lw = plan.value("lw", json::object());
  cfg.plan.lw.do_rescale = get_field<bool>(lw, "plan.lw", "rescale", true);
  cfg.plan.lw.do_normalize = get_field<bool>(lw, "plan.lw", "normalize", true);
  cfg.plan.lw.freeze_kept = get_field<bool>(lw, "plan.lw", "freeze_kept", false);

  if (!j.contains("matrix")) {
    throw ConfigError("config: missing 'matrix' section");
  }
  const json& matrix = j["matrix"];
  if (!matrix.contains("methods") || !matrix["methods"].is_array() || matrix["methods"].empty()) {
    field_error("matrix.methods", "a non-empty method list is required");
  }
  for (const auto& m : matrix["methods"]) {
    cfg.matrix.methods.push_back(m.get<std::string>());
    method_from_string(cfg.matrix.methods.back());  // validate
  }
  cfg.matrix.alphas = get_field<std::vector<double>>(matrix, "matrix", "alphas", {1.0});
  cfg.matrix.penalties = get_field<std::vector<double>>(matrix, "matrix", "penalties", {0.0});
  for (double p : cfg.matrix.penalties) {
    if (p < 0.0) field_error("matrix.penalties", "penalties must be >= 0");
  }
  cfg.matrix.master_seed = get_field<uint64_t>(matrix, "matrix", "master_seed", 1);
  if (matrix.contains("seeds")) {
    if (matrix["seeds"].is_number_unsigned() || matrix["seeds"].is_number_integer()) {
      const int count = matrix["seeds"].get<int>();
      if (count < 1) field_error("matrix.seeds", "seed count must be >= 1");
      for (int s = 1; s <= count; ++s) {
        cfg.matrix.seeds.push_back(static_cast<uint64_t>(s));
      }
    } else if (matrix["seeds"].is_array()) {
      for (const auto& s : matrix["seeds"]) {
        cfg.matrix.seeds.push_back(s.get<uint64_t>());
      }
    } else {
      field_error("matrix.seeds", "expected a count or a list");
    }
  } else {
    cfg.matrix.seeds = {1};
  }

  const json output = j.value("output", json::object());
  cfg.output.save_params = get_field<bool>(output, "output", "save_params", true);

  cfg.plan.validate();
  cfg.train.validate();
  return cfg;
}

MatrixConfig load_matrix_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot open config file '" + path + "'");
  }
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_matrix_config(ss.str());
}

int default_workers() {
  if (const char* env = std::getenv("REINITLAB_WORKERS")) {
    const int n = std::atoi(env);
    if (n >= 1) {
      return n;
    }
  }
  const unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

namespace {

struct RunTask {
  std::string method;
  double alpha = 1.0;
  double penalty = 0.0;
  uint64_t seed = 1;
};

RunRecord execute_task(const MatrixConfig& cfg, const RunTask& task) {
  const uint64_t rng_seed = stream_key({cfg.matrix.master_seed, task.seed});

  const bool images = cfg.data.kind == "synthetic_images";
  std::ostringstream desc;
  desc << (images ? "img_a" : "synth_a") << format_alpha(task.alpha);

  std::ostringstream rid;
  rid << desc.str() << '-' << cfg.arch.name << '-' << to_string(cfg.arch.initializer) << "-d"
      << format_num(cfg.arch.dropout) << "-p" << format_num(task.penalty) << "-b"
      << cfg.plan.steps_per_round << '-' << task.method << "-s" << task.seed;

  RunContext ctx;
  ctx.run_id = rid.str();
  ctx.dataset_desc = desc.str();
  ctx.seed = task.seed;
  ctx.rng_seed = rng_seed;
  ctx.alpha = task.alpha;
  ctx.penalty = task.penalty;

  ReinitPlan plan = cfg.plan;
  plan.method = method_from_string(task.method);
  TrainConfig train_cfg = cfg.train;
  train_cfg.weight_decay = task.penalty;

  RunRecord rec;
  try {
    Dataset train_set, test_set;
    if (images) {
      SyntheticImageSpec spec;
      spec.alpha = task.alpha;
      spec.n_train = cfg.data.n_train;
      spec.n_test = cfg.data.n_test;
      spec.hw = cfg.data.hw;
      spec.channels = cfg.data.channels;
      spec.patch = cfg.data.patch;
      spec.seed = rng_seed;
      std::tie(train_set, test_set) = gen_synthetic_images(spec);
    } else {
      SyntheticSpec spec;
      spec.alpha = task.alpha;
      spec.n_train = cfg.data.n_train;
      spec.n_test = cfg.data.n_test;
      spec.dim = cfg.data.dim;
      spec.seed = rng_seed;
      std::tie(train_set, test_set) = gen_synthetic(spec);
    }
    rec = run_method(plan, cfg.arch, train_set, test_set, train_cfg, ctx,
                     cfg.output.save_params);
  } catch (const std::exception& e) {
    rec.run_id = ctx.run_id;
    rec.method = task.method;
    rec.dataset = ctx.dataset_desc;
    rec.arch = cfg.arch.name;
    rec.seed = task.seed;
    rec.rng_seed = rng_seed;
    rec.alpha = task.alpha;
    rec.penalty = task.penalty;
    rec.budget = cfg.plan.steps_per_round;
    rec.dropout = cfg.arch.dropout;
    rec.initializer = to_string(cfg.arch.initializer);
    rec.status = "failed";
    rec.error = e.what();
  }
  rec.data_kind = cfg.data.kind;
  rec.data_dim = cfg.data.dim;
  rec.data_n_train = cfg.data.n_train;
  rec.data_n_test = cfg.data.n_test;
  rec.data_hw = cfg.data.hw;
  rec.data_channels = cfg.data.channels;
  rec.data_patch = cfg.data.patch;
  return rec;
}

}  // namespace

std::vector<RunRecord> run_matrix(const MatrixConfig& config, int workers,
                                  const std::function<void(const RunRecord&)>& on_done) {
  std::vector<RunTask> tasks;
  for (double alpha : config.matrix.alphas) {
    for (double penalty : config.matrix.penalties) {
      for (const std::string& method : config.matrix.methods) {
        for (uint64_t seed : config.matrix.seeds) {
          tasks.push_back({method, alpha, penalty, seed});
        }
      }
    }
  }
  std::vector<RunRecord> records(tasks.size());

  if (workers < 1) {
    workers = default_workers();
  }
  workers = std::min<int>(workers, static_cast<int>(tasks.size()));

  std::atomic<size_t> next{0};
  std::mutex done_mutex;
  auto worker = [&]() {
    while (true) {
      const size_t i = next.fetch_add(1);
      if (i >= tasks.size()) {
        break;
      }
      records[i] = execute_task(config, tasks[i]);
      if (on_done) {
        std::lock_guard<std::mutex> lock(done_mutex);
        on_done(records[i]);
      }
    }
  };
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(workers));
    for (int t = 0; t < workers; ++t) {
      pool.emplace_back(worker);
    }
    for (auto& th : pool) {
      th.join();
    }
  }

  std::sort(records.begin(), records.end(),
            [](const RunRecord& a, const RunRecord& b) { return a.run_id < b.run_id; });
  return records;
}

std::vector<RunRecord> compute_sweep(const MatrixConfig& config, const std::vector<int>& budgets,
                                     int workers,
                                     const std::function<void(const RunRecord&)>& on_done) {
  if (budgets.empty()) {
    throw ConfigError("sweep: at least one budget is required");
  }
  std::vector<RunRecord> all;
  for (int budget : budgets) {
    if (budget < 1) {
      throw ConfigError("sweep: budgets must be positive");
    }
    MatrixConfig c = config;
    c.plan.steps_per_round = budget;
    auto records = run_matrix(c, workers, on_done);
    all.insert(all.end(), std::make_move_iterator(records.begin()),
               std::make_move_iterator(records.end()));
  }
  std::sort(all.begin(), all.end(),
            [](const RunRecord& a, const RunRecord& b) { return a.run_id < b.run_id; });
  return all;
}

void persist_records(const std::string& out_dir, const std::vector<RunRecord>& records) {
  fs::create_directories(fs::path(out_dir) / "runs");
  std::ofstream csv(fs::path(out_dir) / "results.csv");
  if (!csv) {
    throw ConfigError("cannot write results.csv under '" + out_dir + "'");
  }
  csv << kResultsCsvHeader << '\n';
  for (const auto& rec : records) {
    csv << results_csv_row(rec) << '\n';
    std::ofstream rj(fs::path(out_dir) / "runs" / (rec.run_id + ".json"));
    rj << rec.to_json() << '\n';
  }
}

std::vector<RunRecord> load_records(const std::string& out_dir) {
  const fs::path dir = fs::path(out_dir) / "runs";
  if (!fs::is_directory(dir)) {
    throw ConfigError("no run records under '" + out_dir + "' (expected runs/*.json)");
  }
  std::vector<RunRecord> records;
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() == ".json") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    std::ifstream in(f);
    std::stringstream ss;
    ss << in.rdbuf();
    records.push_back(RunRecord::from_json(ss.str()));
  }
  return records;
}

std::pair<Dataset, Dataset> rebuild_data(const RunRecord& rec) {
  if (rec.data_kind == "synthetic_images") {
    SyntheticImageSpec spec;
    spec.alpha = rec.alpha;
    spec.n_train = rec.data_n_train;
    spec.n_test = rec.data_n_test;
    spec.hw = rec.data_hw;
    spec.channels = rec.data_channels;
    spec.patch = rec.data_patch;
    spec.seed = rec.rng_seed;
    return gen_synthetic_images(spec);
  }
  SyntheticSpec spec;
  spec.alpha = rec.alpha;
  spec.n_train = rec.data_n_train;
  spec.n_test = rec.data_n_test;
  spec.dim = rec.data_dim;
  spec.seed = rec.rng_seed;
  return gen_synthetic(spec);
}

Network rebuild_network(const RunRecord& rec) {
  if (rec.final_params.empty()) {
    throw ConfigError("run '" + rec.run_id + "' was saved without parameters");
  }
  ArchPreset preset = ArchPreset::by_name(rec.arch);
  preset.initializer = init_kind_from_string(rec.initializer);
  preset.dropout = rec.dropout;
  RngStream init_rng(rec.rng_seed, streams::kInit);
  Network net = build_network(preset, init_rng);
  if (net.params().dim() != rec.final_params.size()) {
    throw ConfigError("run '" + rec.run_id + "': parameter count mismatch on rebuild");
  }
  net.params().restore(rec.final_params);
  for (const auto& [block, mu, sigma] : rec.lambda_states) {
    net.set_lambda(block, mu, sigma);
  }
  return net;
}

}  // namespace reinitlab
