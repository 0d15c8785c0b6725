#include "reinitlab/network.hpp"

#include <algorithm>

#include "reinitlab/errors.hpp"

namespace reinitlab {

size_t Network::head_start() const {
  if (feature_blocks_ == 0) {
    return 0;
  }
  return block_end_[static_cast<size_t>(feature_blocks_) - 1];
}

std::pair<size_t, size_t> Network::block_layers(size_t b) const {
  if (b == 0 || b > block_end_.size()) {
    throw ContractError("block_layers: block index out of range");
  }
  const size_t begin = b == 1 ? 0 : block_end_[b - 2];
  return {begin, block_end_[b - 1]};
}

size_t Network::block_of_layer(size_t i) const {
  for (size_t b = 0; b < block_end_.size(); ++b) {
    if (i < block_end_[b]) {
      return b + 1;
    }
  }
  throw ContractError("block_of_layer: layer index out of range");
}

bool Network::has_lambda(size_t block) const {
  return block >= 1 && block <= lambdas_.size() && lambdas_[block - 1].has_value();
}

const LambdaNormLayer& Network::lambda(size_t block) const {
  if (!has_lambda(block)) {
    throw ContractError("lambda: no attachment on block " + std::to_string(block));
  }
  return *lambdas_[block - 1];
}

void Network::set_lambda(size_t block, double mu, double sigma) {
  if (block == 0 || block > lambdas_.size()) {
    throw ContractError("set_lambda: block index out of range");
  }
  if (lambdas_[block - 1].has_value()) {
    lambdas_[block - 1]->set_stats(mu, sigma);
  } else {
    lambdas_[block - 1].emplace(mu, sigma);
  }
}

size_t Network::lambda_count() const {
  size_t n = 0;
  for (const auto& l : lambdas_) {
    n += l.has_value() ? 1 : 0;
  }
  return n;
}

std::vector<std::tuple<size_t, double, double>> Network::lambda_states() const {
  std::vector<std::tuple<size_t, double, double>> out;
  for (size_t b = 0; b < lambdas_.size(); ++b) {
    if (lambdas_[b].has_value()) {
      out.emplace_back(b + 1, lambdas_[b]->mu(), lambdas_[b]->sigma());
    }
  }
  return out;
}

const std::vector<double>& Network::init_scales() const {
  if (!scales_recorded_) {
    throw ContractError("init_scales: scales have not been recorded");
  }
  return init_scales_;
}

std::vector<Network::ExecUnit> Network::exec_units(size_t upto_block,
                                                   bool include_last_lambda) const {
  std::vector<ExecUnit> units;
  const size_t last_block = std::min(upto_block, block_end_.size());
  for (size_t b = 1; b <= last_block; ++b) {
    const auto [begin, end] = block_layers(b);
    for (size_t i = begin; i < end; ++i) {
      units.push_back({static_cast<int>(i), -1});
    }
    const bool is_last = b == last_block;
    if (lambdas_[b - 1].has_value() && (!is_last || include_last_lambda)) {
      units.push_back({-1, static_cast<int>(b)});
    }
  }
  return units;
}

Tensor Network::run(const Tensor& x, Mode mode, RngStream* rng, Tape* tape, size_t upto_block,
                    bool include_last_lambda, int capture_layer, Tensor* captured) const {
  const auto units = exec_units(upto_block, include_last_lambda);
  if (tape) {
    tape->mode = mode;
    tape->acts.clear();
    tape->scratch.clear();
    tape->acts.reserve(units.size() + 1);
    tape->scratch.resize(units.size());
    tape->acts.push_back(x);
  }
  const Tensor* cur = &x;
  Tensor holder;
  for (size_t u = 0; u < units.size(); ++u) {
    const ExecUnit& unit = units[u];
    const Layer& l =
        unit.layer >= 0 ? *layers_[static_cast<size_t>(unit.layer)] : *lambdas_[unit.lambda_block - 1];
    if (captured && unit.layer == capture_layer) {
      *captured = *cur;
    }
    Tensor* scratch = tape ? &tape->scratch[u] : nullptr;
    Tensor next = l.forward(*cur, params_, mode, rng, scratch);
    if (tape) {
      tape->acts.push_back(std::move(next));
      cur = &tape->acts.back();
    } else {
      holder = std::move(next);
      cur = &holder;
    }
  }
  return *cur;
}

Tensor Network::forward(const Tensor& x, Mode mode, RngStream* rng) const {
  return run(x, mode, rng, nullptr, block_end_.size(), true, -1, nullptr);
}

Tensor Network::forward(const Tensor& x, Mode mode, RngStream* rng, Tape& tape) const {
  return run(x, mode, rng, &tape, block_end_.size(), true, -1, nullptr);
}

Tensor Network::forward_to_block(const Tensor& x, size_t k) const {
  if (k == 0 || k > block_end_.size()) {
    throw ContractError("forward_to_block: block index out of range");
  }
  return run(x, Mode::Eval, nullptr, nullptr, k, false, -1, nullptr);
}

Tensor Network::capture_input_of_layer(const Tensor& x, size_t layer_index) const {
  if (layer_index >= layers_.size()) {
    throw ContractError("capture_input_of_layer: layer index out of range");
  }
  Tensor captured;
  run(x, Mode::Eval, nullptr, nullptr, block_end_.size(), true,
      static_cast<int>(layer_index), &captured);
  return captured;
}

void Network::backward(const Tape& tape, const Tensor& grad_out,
                       std::span<double> grad_flat) const {
  const auto units = exec_units(block_end_.size(), true);
  if (tape.acts.size() != units.size() + 1) {
    throw ContractError("backward: tape does not match network structure");
  }
  Tensor grad = grad_out;
  for (size_t u = units.size(); u-- > 0;) {
    const ExecUnit& unit = units[u];
    const Layer& l =
        unit.layer >= 0 ? *layers_[static_cast<size_t>(unit.layer)] : *lambdas_[unit.lambda_block - 1];
    // Nothing upstream of the first unit consumes an input gradient.
    const bool skip_input = u == 0;
    grad = l.backward(tape.acts[u], tape.acts[u + 1], grad, &tape.scratch[u], params_,
                      grad_flat, skip_input);
  }
}

// ---------------------------------------------------------------------------
// NetworkBuilder
// ---------------------------------------------------------------------------

NetworkBuilder& NetworkBuilder::name(std::string arch_name) {
  net_.arch_name_ = std::move(arch_name);
  return *this;
}

NetworkBuilder& NetworkBuilder::input(std::vector<size_t> shape) {
  net_.input_shape_ = std::move(shape);
  return *this;
}

NetworkBuilder& NetworkBuilder::classes(size_t n) {
  net_.num_classes_ = n;
  return *this;
}

NetworkBuilder& NetworkBuilder::begin_block() {
  if (in_block_) {
    throw ContractError("NetworkBuilder: begin_block inside an open block");
  }
  in_block_ = true;
  return *this;
}

NetworkBuilder& NetworkBuilder::add(std::unique_ptr<Layer> layer) {
  if (!in_block_) {
    throw ContractError("NetworkBuilder: add outside a block");
  }
  net_.layers_.push_back(std::move(layer));
  return *this;
}

NetworkBuilder& NetworkBuilder::end_block() {
  if (!in_block_) {
    throw ContractError("NetworkBuilder: end_block without begin_block");
  }
  if (!net_.block_end_.empty() && net_.layers_.size() == net_.block_end_.back()) {
    throw ContractError("NetworkBuilder: empty block");
  }
  net_.block_end_.push_back(net_.layers_.size());
  in_block_ = false;
  return *this;
}

NetworkBuilder& NetworkBuilder::feature_blocks(int k) {
  net_.feature_blocks_ = k;
  return *this;
}

NetworkBuilder& NetworkBuilder::fc_boundary(int block) {
  fc_boundary_ = block;
  return *this;
}

Network NetworkBuilder::build(InitKind init, RngStream& init_rng) {
  if (in_block_) {
    throw ContractError("NetworkBuilder: build with an open block");
  }
  if (net_.layers_.empty() || net_.block_end_.empty()) {
    throw ConfigError("network: no layers");
  }
  if (net_.input_shape_.empty() || net_.num_classes_ == 0) {
    throw ConfigError("network: input shape and class count are required");
  }
  const int blocks = static_cast<int>(net_.block_end_.size());
  if (net_.feature_blocks_ < 1 || net_.feature_blocks_ > blocks) {
    throw ConfigError("network: feature block count must lie in [1, num_blocks]");
  }
  net_.fc_boundary_ = fc_boundary_ < 0 ? net_.feature_blocks_ : fc_boundary_;
  if (net_.fc_boundary_ < 1 || net_.fc_boundary_ > blocks) {
    throw ConfigError("network: fc boundary out of range");
  }
  net_.lambdas_.assign(net_.block_end_.size(), std::nullopt);

  // shape check across the whole stack
  std::vector<size_t> shape = net_.input_shape_;
  shape.insert(shape.begin(), 1);  // probe batch of one
  for (const auto& l : net_.layers_) {
    shape = l->output_shape(shape);
  }
  if (shape.size() != 2 || shape[1] != net_.num_classes_) {
    throw ConfigError("network: stack does not end in [n, classes] output");
  }

  for (size_t i = 0; i < net_.layers_.size(); ++i) {
    net_.layers_[i]->register_params(net_.params_, static_cast<int>(i));
  }
  net_.params_.finalize();
  net_.init_kind_ = init;
  for (const auto& l : net_.layers_) {
    l->init_params(net_.params_, init, init_rng);
  }
  return std::move(net_);
}

}  // namespace reinitlab
