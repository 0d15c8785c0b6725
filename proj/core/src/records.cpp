#include "reinitlab/records.hpp"

#include <cmath>
#include <sstream>

#include <json.hpp>

#include "reinitlab/errors.hpp"

namespace reinitlab {

using nlohmann::json;

const char* const kResultsCsvHeader =
    "run_id,method,alpha_or_dataset,arch,seed,penalty,budget,dropout,initializer,"
    "train_acc,val_acc,test_acc,total_steps,wall_ms";

namespace {

std::string num_or_empty(double v) {
  if (std::isnan(v)) {
    return "";
  }
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

std::string results_csv_row(const RunRecord& r) {
  std::ostringstream os;
  os << r.run_id << ',' << r.method << ',' << r.dataset << ',' << r.arch << ',' << r.seed << ','
     << num_or_empty(r.penalty) << ',' << r.budget << ',' << num_or_empty(r.dropout) << ','
     << r.initializer << ',';
  if (r.ok()) {
    os << num_or_empty(r.train_acc) << ',' << num_or_empty(r.val_acc) << ','
       << num_or_empty(r.test_acc) << ',' << r.total_steps << ',';
  } else {
    os << ",,," << r.total_steps << ',';
  }
  os << num_or_empty(r.wall_ms);
  return os.str();
}

std::string RunRecord::to_json() const {
  json j;
  j["run_id"] = run_id;
  j["method"] = method;
  j["dataset"] = dataset;
  j["arch"] = arch;
  j["seed"] = seed;
  j["rng_seed"] = rng_seed;
  if (!std::isnan(alpha)) j["alpha"] = alpha;
  j["penalty"] = penalty;
  j["budget"] = budget;
  j["dropout"] = dropout;
  j["initializer"] = initializer;
  j["data"] = {{"kind", data_kind},     {"dim", data_dim},
               {"n_train", data_n_train}, {"n_test", data_n_test},
               {"hw", data_hw},         {"channels", data_channels},
               {"patch", data_patch}};
  j["status"] = status;
  if (!error.empty()) j["error"] = error;
  if (ok()) {
    j["final"] = {{"train_acc", train_acc},
                  {"test_acc", test_acc},
                  {"total_steps", total_steps},
                  {"wall_ms", wall_ms}};
    if (!std::isnan(val_acc)) j["final"]["val_acc"] = val_acc;
  }
  j["rounds"] = json::array();
  for (const auto& rm : rounds) {
    json r;
    r["round"] = rm.round;
    r["kept_block"] = rm.kept_block;
    r["steps"] = rm.steps;
    r["train_acc"] = rm.train_acc;
    if (!std::isnan(rm.val_acc)) r["val_acc"] = rm.val_acc;
    r["test_acc"] = rm.test_acc;
    json st = json::object();
    for (const auto& [thr, s] : rm.steps_to) {
      std::ostringstream key;
      key << thr;
      st[key.str()] = s;
    }
    r["steps_to"] = st;
    j["rounds"].push_back(std::move(r));
  }
  if (!final_params.empty()) {
    j["params"] = final_params;
  }
  if (!lambda_states.empty()) {
    j["lambdas"] = json::array();
    for (const auto& [block, mu, sigma] : lambda_states) {
      j["lambdas"].push_back({{"block", block}, {"mu", mu}, {"sigma", sigma}});
    }
  }
  return j.dump();
}

RunRecord RunRecord::from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("run record: ") + e.what());
  }
  RunRecord r;
  r.run_id = j.value("run_id", "");
  r.method = j.value("method", "");
  r.dataset = j.value("dataset", "");
  r.arch = j.value("arch", "");
  r.seed = j.value("seed", uint64_t{0});
  r.rng_seed = j.value("rng_seed", uint64_t{0});
  r.alpha = j.value("alpha", std::numeric_limits<double>::quiet_NaN());
  r.penalty = j.value("penalty", 0.0);
  r.budget = j.value("budget", 0);
  r.dropout = j.value("dropout", 0.0);
  r.initializer = j.value("initializer", "he_normal");
  if (j.contains("data")) {
    const auto& dj = j["data"];
    r.data_kind = dj.value("kind", "synthetic");
    r.data_dim = dj.value("dim", 128);
    r.data_n_train = dj.value("n_train", 256);
    r.data_n_test = dj.value("n_test", 2048);
    r.data_hw = dj.value("hw", 16);
    r.data_channels = dj.value("channels", 3);
    r.data_patch = dj.value("patch", 4);
  }
  r.status = j.value("status", "ok");
  r.error = j.value("error", "");
  if (j.contains("final")) {
    const auto& f = j["final"];
    r.train_acc = f.value("train_acc", std::numeric_limits<double>::quiet_NaN());
    r.val_acc = f.value("val_acc", std::numeric_limits<double>::quiet_NaN());
    r.test_acc = f.value("test_acc", std::numeric_limits<double>::quiet_NaN());
    r.total_steps = f.value("total_steps", 0L);
    r.wall_ms = f.value("wall_ms", 0.0);
  }
  for (const auto& rj : j.value("rounds", json::array())) {
    RoundMetrics rm;
    rm.round = rj.value("round", 0);
    rm.kept_block = rj.value("kept_block", -1);
    rm.steps = rj.value("steps", 0);
    rm.train_acc = rj.value("train_acc", 0.0);
    rm.val_acc = rj.value("val_acc", std::numeric_limits<double>::quiet_NaN());
    rm.test_acc = rj.value("test_acc", 0.0);
    if (rj.contains("steps_to")) {
      for (const auto& [key, val] : rj["steps_to"].items()) {
        rm.steps_to[std::stod(key)] = val.get<int>();
      }
    }
    r.rounds.push_back(std::move(rm));
  }
  if (j.contains("params")) {
    r.final_params = j["params"].get<std::vector<double>>();
  }
  for (const auto& lj : j.value("lambdas", json::array())) {
    r.lambda_states.emplace_back(lj.value("block", size_t{0}), lj.value("mu", 0.0),
                                 lj.value("sigma", 1.0));
  }
  return r;
}

}  // namespace reinitlab
