#include "reinitlab/reinit.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "reinitlab/errors.hpp"

namespace reinitlab {

size_t Mask::count() const noexcept {
  size_t n = 0;
  for (uint8_t b : bits) {
    n += b;
  }
  return n;
}

std::string to_string(Method m) {
  switch (m) {
    case Method::BL: return "BL";
    case Method::WELSR: return "WELSR";
    case Method::WELS: return "WELS";
    case Method::DSD: return "DSD";
    case Method::FC: return "FC";
    case Method::LW: return "LW";
    case Method::RESCALE_ONLY: return "RESCALE_ONLY";
  }
  return "?";
}

Method method_from_string(const std::string& name) {
  if (name == "BL") return Method::BL;
  if (name == "WELSR") return Method::WELSR;
  if (name == "WELS") return Method::WELS;
  if (name == "DSD") return Method::DSD;
  if (name == "FC") return Method::FC;
  if (name == "LW") return Method::LW;
  if (name == "RESCALE_ONLY") return Method::RESCALE_ONLY;
  throw ConfigError("unknown method '" + name + "'");
}

int method_rank(const std::string& name) {
  if (name == "BL") return 0;
  if (name == "WELSR") return 1;
  if (name == "DSD") return 2;
  if (name == "WELS") return 3;
  if (name == "FC") return 4;
  if (name == "LW") return 5;
  return 6;
}

void ReinitPlan::validate() const {
  if (!(rho > 0.0 && rho <= 1.0)) {
    throw ConfigError("plan: rho must lie in (0, 1]");
  }
  if (feature_blocks < 1) {
    throw ConfigError("plan: feature block count must be >= 1");
  }
  if (reps < 1) {
    throw ConfigError("plan: repetitions per block must be >= 1");
  }
  if (steps_per_round < 1) {
    throw ConfigError("plan: steps per round must be positive");
  }
  if (variant == ScheduleVariant::AppendixA && feature_blocks != 3) {
    throw ConfigError("plan: the 5-round alternate schedule requires 3 feature blocks");
  }
}

std::vector<RoundSpec> make_schedule(const ReinitPlan& plan) {
  plan.validate();
  std::vector<RoundSpec> rounds;
  const bool appendix = plan.variant == ScheduleVariant::AppendixA;
  const int n_rounds = appendix ? 5 : plan.feature_blocks * plan.reps;
  if (plan.method == Method::BL) {
    rounds.push_back({1, -1, 1, n_rounds * plan.steps_per_round});
    return rounds;
  }
  if (plan.method == Method::LW) {
    if (appendix) {
      static constexpr int kept[5] = {1, 1, 2, 2, 3};
      int visits[4] = {0, 0, 0, 0};
      for (int r = 0; r < 5; ++r) {
        rounds.push_back({r + 1, kept[r], ++visits[kept[r]], plan.steps_per_round});
      }
    } else {
      int index = 1;
      for (int k = 1; k <= plan.feature_blocks; ++k) {
        for (int n = 1; n <= plan.reps; ++n) {
          rounds.push_back({index++, k, n, plan.steps_per_round});
        }
      }
    }
    return rounds;
  }
  // mask methods and rescale-only: uniform rounds without a kept block
  for (int r = 1; r <= n_rounds; ++r) {
    rounds.push_back({r, -1, r, plan.steps_per_round});
  }
  return rounds;
}

void apply_reinit(ParameterStore& params, const Mask& s, std::span<const double> eta) {
  auto w = params.flat();
  if (s.size() != w.size() || eta.size() != w.size()) {
    throw ContractError("apply_reinit: mask/eta length mismatch");
  }
  for (size_t i = 0; i < w.size(); ++i) {
    if (s.bits[i]) {
      w[i] = eta[i];
    }
  }
}

Mask mask_random(size_t d, double rho, RngStream& rng) {
  if (!(rho > 0.0 && rho <= 1.0)) {
    throw ConfigError("mask_random: rho must lie in (0, 1]");
  }
  const size_t ones = static_cast<size_t>(std::floor(rho * static_cast<double>(d)));
  Mask m;
  m.bits.assign(d, 0);
  // partial Fisher-Yates over the index set
  std::vector<size_t> idx(d);
  std::iota(idx.begin(), idx.end(), 0);
  for (size_t i = 0; i < ones; ++i) {
    const size_t j = i + static_cast<size_t>(rng.below(d - i));
    std::swap(idx[i], idx[j]);
    m.bits[idx[i]] = 1;
  }
  return m;
}

Mask mask_smallest(const ParameterStore& params, double rho) {
  if (!(rho > 0.0 && rho <= 1.0)) {
    throw ConfigError("mask_smallest: rho must lie in (0, 1]");
  }
  const auto w = params.flat();
  const size_t d = w.size();
  const size_t ones = static_cast<size_t>(std::floor(rho * static_cast<double>(d)));
  std::vector<size_t> idx(d);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](size_t a, size_t b) {
    const double ma = std::fabs(w[a]), mb = std::fabs(w[b]);
    if (ma != mb) return ma < mb;
    return a < b;
  });
  Mask m;
  m.bits.assign(d, 0);
  for (size_t i = 0; i < ones; ++i) {
    m.bits[idx[i]] = 1;
  }
  return m;
}

namespace {

Mask mask_from_layers(const Network& net, const std::vector<size_t>& layer_ids) {
  Mask m;
  m.bits.assign(net.params().dim(), 0);
  for (size_t li : layer_ids) {
    for (size_t seg : net.layer(li).segments()) {
      const ParamSegment& s = net.params().segment(seg);
      std::fill(m.bits.begin() + s.offset, m.bits.begin() + s.offset + s.length, 1);
    }
  }
  return m;
}

}  // namespace

Mask mask_fc(const Network& net) {
  const size_t boundary = static_cast<size_t>(net.fc_boundary_block());
  const size_t first = net.block_layers(boundary).second;
  std::vector<size_t> dense;
  for (size_t i = first; i < net.num_layers(); ++i) {
    if (net.layer(i).kind() == LayerKind::Dense) {
      dense.push_back(i);
    }
  }
  if (dense.empty()) {
    throw ConfigError("mask_fc: no dense layer above the fc boundary block");
  }
  return mask_from_layers(net, dense);
}

Mask mask_above_block(const Network& net, int k) {
  if (k < 1 || static_cast<size_t>(k) > net.num_blocks()) {
    throw ContractError("mask_above_block: block index out of range");
  }
  const size_t first = net.block_layers(static_cast<size_t>(k)).second;
  std::vector<size_t> layers;
  for (size_t i = first; i < net.num_layers(); ++i) {
    if (net.layer(i).has_params()) {
      layers.push_back(i);
    }
  }
  return mask_from_layers(net, layers);
}

MaskSource::MaskSource(Method method, double rho, RngStream rng)
    : method_(method), rho_(rho), rng_(rng) {}

Mask MaskSource::next(const Network& net) {
  const size_t d = net.params().dim();
  switch (method_) {
    case Method::WELSR:
      return mask_random(d, rho_, rng_);
    case Method::WELS:
      if (!fixed_.has_value()) {
        fixed_ = mask_random(d, rho_, rng_);
      }
      return *fixed_;
    case Method::DSD:
      return mask_smallest(net.params(), rho_);
    case Method::FC:
      return mask_fc(net);
    default:
      throw ContractError("MaskSource: method has no mask");
  }
}

std::vector<double> draw_eta(const Network& net, RngStream& rng) {
  // Replays the builder's initialization pass into a shadow store with the
  // same layout, leaving the live parameters untouched.
  ParameterStore shadow;
  for (const ParamSegment& seg : net.params().segments()) {
    shadow.add(seg.layer_id, seg.tensor_id, seg.shape);
  }
  shadow.finalize();
  for (size_t i = 0; i < net.num_layers(); ++i) {
    if (net.layer(i).has_params()) {
      net.layer(i).init_params(shadow, net.initializer(), rng);
    }
  }
  const auto fresh = shadow.flat();
  return {fresh.begin(), fresh.end()};
}

void record_init_scales(Network& net) {
  if (net.scales_recorded_) {
    throw ContractError("record_init_scales: already recorded for this network");
  }
  const size_t n = net.params().num_segments();
  net.init_scales_.resize(n);
  for (size_t i = 0; i < n; ++i) {
    net.init_scales_[i] = net.params().segment_norm(i);
  }
  net.scales_recorded_ = true;
}

namespace {

void rescale_block_range(Network& net, size_t first_block, size_t last_block) {
  const auto& scales = net.init_scales();
  for (size_t b = first_block; b <= last_block; ++b) {
    const auto [begin, end] = net.block_layers(b);
    for (size_t li = begin; li < end; ++li) {
      for (size_t seg : net.layer(li).segments()) {
        const double recorded = scales[seg];
        const double current = net.params().segment_norm(seg);
        if (recorded > 0.0 && current > 0.0) {
          net.params().scale_segment(seg, recorded / current);
        }
      }
    }
  }
}

}  // namespace

void rescale_blocks(Network& net, int k) {
  if (k < 1 || static_cast<size_t>(k) > net.num_blocks()) {
    throw ContractError("rescale_blocks: block index out of range");
  }
  rescale_block_range(net, 1, static_cast<size_t>(k));
}

void rescale_all(Network& net) { rescale_block_range(net, 1, net.num_blocks()); }

std::pair<double, double> compute_block_stats(const Network& net, int k,
                                              const Tensor& sample_x) {
  Tensor z = net.forward_to_block(sample_x, static_cast<size_t>(k));
  double mean = 0.0;
  for (size_t i = 0; i < z.size(); ++i) {
    mean += z[i];
  }
  mean /= static_cast<double>(z.size());
  double var = 0.0;
  for (size_t i = 0; i < z.size(); ++i) {
    const double d = z[i] - mean;
    var += d * d;
  }
  var /= static_cast<double>(z.size());
  double sigma = std::sqrt(var);
  if (sigma < 1e-8) {
    sigma = 1e-8;
  }
  return {mean, sigma};
}

void insert_or_update_lambda(Network& net, int k, double mu, double sigma,
                             bool expect_existing) {
  const bool present = net.has_lambda(static_cast<size_t>(k));
  if (expect_existing && !present) {
    throw ContractError("insert_or_update_lambda: update requested but no layer present");
  }
  if (!expect_existing && present) {
    throw ContractError("insert_or_update_lambda: block already has a normalizer");
  }
  net.set_lambda(static_cast<size_t>(k), mu, sigma);
}

namespace {

std::vector<uint8_t> frozen_mask_for_blocks(const Network& net, int k) {
  std::vector<uint8_t> frozen(net.params().dim(), 0);
  for (size_t b = 1; b <= static_cast<size_t>(k); ++b) {
    const auto [begin, end] = net.block_layers(b);
    for (size_t li = begin; li < end; ++li) {
      for (size_t seg : net.layer(li).segments()) {
        const ParamSegment& s = net.params().segment(seg);
        std::fill(frozen.begin() + s.offset, frozen.begin() + s.offset + s.length, 1);
      }
    }
  }
  return frozen;
}

}  // namespace

TrainTrace lw_round(Network& net, const RoundSpec& round, const LwFlags& flags,
                    const Dataset& train_data, const Dataset& val_data, const Tensor& sample_x,
                    const TrainConfig& round_cfg, RngStream& eta_rng, RngStream& train_rng) {
  const int k = round.kept_block;
  if (k < 1 || k > net.feature_blocks()) {
    throw ContractError("lw_round: kept block out of range");
  }
  if (flags.do_rescale) {
    rescale_blocks(net, k);
  }
  if (flags.do_normalize) {
    const auto [mu, sigma] = compute_block_stats(net, k, sample_x);
    insert_or_update_lambda(net, k, mu, sigma, round.visit > 1);
  }
  const Mask above = mask_above_block(net, k);
  const std::vector<double> eta = draw_eta(net, eta_rng);
  apply_reinit(net.params(), above, eta);

  TrainConfig cfg = round_cfg;
  cfg.max_steps = round.steps;
  std::vector<uint8_t> frozen;
  if (flags.freeze_kept) {
    frozen = frozen_mask_for_blocks(net, k);
  }
  return train(net, train_data, val_data, cfg, train_rng,
               flags.freeze_kept ? &frozen : nullptr);
}

namespace {

constexpr double kRoundThresholds[] = {0.5, 0.9, 0.95, 0.99, 1.0};

RoundMetrics round_metrics(const Network& net, const RoundSpec& round, const TrainTrace& trace,
                           const Dataset& train_data, const Dataset& val_data,
                           const Dataset& test_data) {
  RoundMetrics rm;
  rm.round = round.index;
  rm.kept_block = round.kept_block;
  rm.steps = trace.total_steps;
  rm.train_acc = evaluate_accuracy(net, train_data);
  if (!val_data.empty()) {
    rm.val_acc = evaluate_accuracy(net, val_data);
  }
  rm.test_acc = evaluate_accuracy(net, test_data);
  for (double thr : kRoundThresholds) {
    if (auto s = trace.steps_to(thr)) {
      rm.steps_to[thr] = *s;
    }
  }
  return rm;
}

}  // namespace

std::pair<Dataset, Dataset> split_train_val(const Dataset& full, double val_fraction,
                                            uint64_t rng_seed) {
  const size_t n = full.size();
  const size_t n_val = static_cast<size_t>(std::floor(val_fraction * static_cast<double>(n)));
  if (n_val == 0) {
    return {full, Dataset{}};
  }
  RngStream split_rng(rng_seed, streams::kSplit);
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  split_rng.shuffle(order.begin(), order.end());
  Dataset train = full.subset({order.data(), n - n_val});
  Dataset val = full.subset({order.data() + (n - n_val), n_val});
  return {std::move(train), std::move(val)};
}

Tensor stats_sample(const Dataset& train_data, uint64_t rng_seed) {
  RngStream stats_rng(rng_seed, streams::kStatsSample);
  const size_t want = std::min<size_t>(256, train_data.size());
  std::vector<size_t> pick(train_data.size());
  std::iota(pick.begin(), pick.end(), 0);
  if (want < pick.size()) {
    stats_rng.shuffle(pick.begin(), pick.end());
    pick.resize(want);
  }
  return train_data.subset(pick).x;
}

RunRecord run_method(const ReinitPlan& plan, const ArchPreset& arch, const Dataset& train_full,
                     const Dataset& test_data, const TrainConfig& base_cfg,
                     const RunContext& ctx, bool keep_params) {
  const auto t0 = std::chrono::steady_clock::now();
  plan.validate();
  base_cfg.validate();
  if (train_full.empty()) {
    throw ConfigError("run_method: empty training set");
  }

  RunRecord rec;
  rec.run_id = ctx.run_id;
  rec.method = to_string(plan.method);
  rec.dataset = ctx.dataset_desc;
  rec.arch = arch.name;
  rec.seed = ctx.seed;
  const uint64_t ms = ctx.rng_seed != 0 ? ctx.rng_seed : ctx.seed;
  rec.rng_seed = ms;
  rec.alpha = ctx.alpha;
  rec.penalty = ctx.penalty;
  rec.budget = plan.steps_per_round;
  rec.dropout = arch.dropout;
  rec.initializer = to_string(arch.initializer);

  // Fixed train/validation split, shared by every round of the run.
  auto [train_data, val_data] = split_train_val(train_full, base_cfg.val_fraction, ms);
  if (train_data.empty()) {
    throw ConfigError("run_method: validation split leaves no training data");
  }

  RngStream init_rng(ms, streams::kInit);
  Network net = build_network(arch, init_rng);
  record_init_scales(net);

  // One fixed calibration batch per run for the block statistics.
  Tensor sample_x;
  if (plan.method == Method::LW) {
    sample_x = stats_sample(train_data, ms);
  }

  const auto schedule = make_schedule(plan);
  RngStream train_rng(ms, streams::kTrainLoop);
  RngStream mask_root(ms, streams::kMask);
  RngStream eta_root(ms, streams::kEta);
  MaskSource masks(plan.method, plan.rho, mask_root);

  TrainConfig round_cfg = base_cfg;
  long total_steps = 0;
  for (const RoundSpec& round : schedule) {
    TrainTrace trace;
    RngStream round_train = train_rng.substream(static_cast<uint64_t>(round.index));
    switch (plan.method) {
      case Method::BL: {
        round_cfg.max_steps = round.steps;
        trace = train(net, train_data, val_data, round_cfg, round_train);
        break;
      }
      case Method::WELSR:
      case Method::WELS:
      case Method::DSD:
      case Method::FC: {
        if (round.index > 1) {
          const Mask m = masks.next(net);
          RngStream eta_rng = eta_root.substream(static_cast<uint64_t>(round.index));
          const std::vector<double> eta = draw_eta(net, eta_rng);
          apply_reinit(net.params(), m, eta);
        }
        round_cfg.max_steps = round.steps;
        trace = train(net, train_data, val_data, round_cfg, round_train);
        break;
      }
      case Method::RESCALE_ONLY: {
        if (round.index > 1) {
          rescale_all(net);
        }
        round_cfg.max_steps = round.steps;
        trace = train(net, train_data, val_data, round_cfg, round_train);
        break;
      }
      case Method::LW: {
        RngStream eta_rng = eta_root.substream(static_cast<uint64_t>(round.index));
        trace = lw_round(net, round, plan.lw, train_data, val_data, sample_x, round_cfg,
                         eta_rng, round_train);
        break;
      }
    }
    total_steps += trace.total_steps;
    rec.rounds.push_back(round_metrics(net, round, trace, train_data, val_data, test_data));
  }

  rec.train_acc = evaluate_accuracy(net, train_data);
  if (!val_data.empty()) {
    rec.val_acc = evaluate_accuracy(net, val_data);
  }
  rec.test_acc = evaluate_accuracy(net, test_data);
  rec.total_steps = total_steps;
  if (keep_params) {
    rec.final_params = net.params().snapshot();
    rec.lambda_states = net.lambda_states();
  }
  const auto t1 = std::chrono::steady_clock::now();
  rec.wall_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
  return rec;
}

}  // namespace reinitlab
