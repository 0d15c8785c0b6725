#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "reinitlab/network.hpp"
#include "reinitlab/presets.hpp"
#include "reinitlab/records.hpp"
#include "reinitlab/rng.hpp"
#include "reinitlab/train.hpp"

namespace reinitlab {

/// Binary selection vector s over the flattened parameter space.
struct Mask {
  std::vector<uint8_t> bits;

  size_t size() const noexcept { return bits.size(); }
  size_t count() const noexcept;
};

enum class Method { BL, WELSR, WELS, DSD, FC, LW, RESCALE_ONLY };

std::string to_string(Method m);
Method method_from_string(const std::string& name);
/// Fixed comparison order used for label tie-breaks: BL < WELSR < DSD < WELS < FC < LW.
int method_rank(const std::string& name);

enum class ScheduleVariant { Main, AppendixA };

struct LwFlags {
  bool do_rescale = true;
  bool do_normalize = true;
  bool freeze_kept = false;
};

/// Which training regime to run and with what round structure.
struct ReinitPlan {
  Method method = Method::BL;
  double rho = 0.2;        // reinitialized fraction for WELSR/WELS/DSD
  int feature_blocks = 3;  // K
  int reps = 3;            // N, visits per block
  int steps_per_round = 200;
  ScheduleVariant variant = ScheduleVariant::Main;
  LwFlags lw;

  void validate() const;
};

struct RoundSpec {
  int index = 0;       // 1-based round number
  int kept_block = 0;  // k for the layerwise method; -1 otherwise
  int visit = 0;       // 1-based visit count of kept_block (layerwise)
  int steps = 0;
};

/// Round list for the plan. The single-training baseline gets one round whose
/// budget equals the sum over the multi-round schedule, so every method under
/// a common plan trains the same number of steps.
std::vector<RoundSpec> make_schedule(const ReinitPlan& plan);

/// w <- (1 - s) (*) w + s (*) eta, elementwise over the flat vector.
void apply_reinit(ParameterStore& params, const Mask& s, std::span<const double> eta);

/// Exactly floor(rho * d) ones at positions drawn uniformly without
/// replacement.
Mask mask_random(size_t d, double rho, RngStream& rng);
/// Ones at the floor(rho * d) smallest |w_i|; ties broken by lowest index.
Mask mask_smallest(const ParameterStore& params, double rho);
/// Ones on every parameter of dense layers after the fc boundary block
/// (classifier head included), zeros elsewhere.
Mask mask_fc(const Network& net);
/// Ones on every trainable parameter of layers strictly above 1-based block k.
Mask mask_above_block(const Network& net, int k);

/// Per-run mask provider realizing the four selection strategies; the fixed
/// strategy draws once on first use and then replays the same mask.
class MaskSource {
 public:
  MaskSource(Method method, double rho, RngStream rng);
  Mask next(const Network& net);

 private:
  Method method_;
  double rho_;
  RngStream rng_;
  std::optional<Mask> fixed_;
};

/// Fresh initialization vector: what the architecture's initializer would
/// produce for every trainable tensor (biases zero), drawn from rng.
std::vector<double> draw_eta(const Network& net, RngStream& rng);

/// Records the Frobenius norm of every parameter tensor. Must be called
/// exactly once, right after initialization.
void record_init_scales(Network& net);

/// Rescales every parameter tensor in blocks 1..k back to its recorded norm.
/// Tensors with zero recorded or zero current norm are left unchanged.
void rescale_blocks(Network& net, int k);
/// Rescale across all blocks.
void rescale_all(Network& net);

/// Scalar mean and population standard deviation of block k's output on
/// sample_x (eval mode, block k's own normalizer excluded). sigma is clamped
/// below at 1e-8.
std::pair<double, double> compute_block_stats(const Network& net, int k, const Tensor& sample_x);

/// Attaches or refreshes the scalar normalizer after block k. expect_existing
/// states the caller's intent: updating a missing layer (or re-inserting an
/// existing one) is a contract violation.
void insert_or_update_lambda(Network& net, int k, double mu, double sigma, bool expect_existing);

/// One layerwise round: rescale blocks 1..k, recalibrate the block-k
/// normalizer, reinitialize everything above block k, then fine-tune the
/// whole model (kept blocks held only when freeze_kept) for the round budget.
TrainTrace lw_round(Network& net, const RoundSpec& round, const LwFlags& flags,
                    const Dataset& train_data, const Dataset& val_data, const Tensor& sample_x,
                    const TrainConfig& round_cfg, RngStream& eta_rng, RngStream& train_rng);

/// Identity of one run inside an experiment matrix. seed is the nominal
/// label recorded in outputs; rng_seed (when nonzero) is the master seed
/// actually driving every stream, defaulting to seed itself.
struct RunContext {
  std::string run_id;
  std::string dataset_desc;
  uint64_t seed = 0;
  uint64_t rng_seed = 0;
  double alpha = std::numeric_limits<double>::quiet_NaN();
  double penalty = 0.0;
};

/// Deterministic train/validation split used by every round of a run.
std::pair<Dataset, Dataset> split_train_val(const Dataset& full, double val_fraction,
                                            uint64_t rng_seed);
/// Fixed 256-row calibration batch for block statistics and weight-size
/// measurements, drawn once per run from the training split.
Tensor stats_sample(const Dataset& train_data, uint64_t rng_seed);

/// Executes the full multi-round protocol for one (plan, architecture, data,
/// seed) cell and returns its record. keep_params controls whether the final
/// parameter vector is retained in the record.
RunRecord run_method(const ReinitPlan& plan, const ArchPreset& arch, const Dataset& train_full,
                     const Dataset& test_data, const TrainConfig& base_cfg,
                     const RunContext& ctx, bool keep_params = true);

/// Stream ids used to derive all per-run randomness from the run seed.
namespace streams {
inline constexpr uint64_t kDataTrain = 1;
inline constexpr uint64_t kDataTest = 2;
inline constexpr uint64_t kInit = 3;
inline constexpr uint64_t kSplit = 4;
inline constexpr uint64_t kStatsSample = 5;
inline constexpr uint64_t kTrainLoop = 6;
inline constexpr uint64_t kMask = 7;
inline constexpr uint64_t kEta = 8;
inline constexpr uint64_t kFlatness = 9;
}  // namespace streams

}  // namespace reinitlab
