// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "hoiforge/diffusion.hpp"
#include "hoiforge/json_io.hpp"
#include "hoiforge/object.hpp"
#include "hoiforge/types.hpp"

#include <array>
#include <random>
#include <string>
#include <vector>

namespace hoiforge {

// MLP denoiser predicting x0 from (x_t, t, conditioning). The input vector is
// [x_t + positional augmentation ; time embedding ; condition embedding], the
// positional augmentation being a fixed sinusoidal frame code plus one learned
// scalar per agent block (left hand, right hand, object).
struct ModelConfig {
    int frames = 150;
    int hidden_width = 512;
    int hidden_layers = 4;
    int time_dim = 64;
    int embed_dim = 64;   // task embedding table row width
    int cond_dim = 128;   // condition embedding width after cond_proj
    int table_rows = kNumActions * kNumHandModes;
    double data_scale = 1.0;  // physical = data_scale * model-space
    std::string activation = "silu";  // "identity" admits closed-form oracles

    int d() const { return frames * kFrameDim; }
    int cond_input_dim() const { return kCondScoreDim + embed_dim + kObjectFeatureDim; }
    int input_dim() const { return d() + time_dim + cond_dim; }
};

Json model_config_to_json(const ModelConfig& c);
ModelConfig model_config_from_json(const Json& j);

// Offsets into the flat parameter vector.
struct ParamLayout {
    std::vector<int> w_off, b_off, w_rows, w_cols;  // hidden layers + output
    int agent_off = 0;    // 3 scalars
    int table_off = 0;    // table_rows x embed_dim, row major
    int cond_w_off = 0;   // cond_dim x cond_input_dim, column major
    int cond_b_off = 0;   // cond_dim
    int null_off = 0;     // cond_dim
    int total = 0;
    static ParamLayout build(const ModelConfig& c);
};

struct DenoiserModel {
    ModelConfig config;
    ParamLayout layout;
    VecX params;
    VecX pos_embed;  // derived from config; call refresh_derived() after edits

    static DenoiserModel create(const ModelConfig& c, uint64_t seed);
    static DenoiserModel zeros(const ModelConfig& c);
    void refresh_derived();

    Eigen::Map<const MatX> weight(int layer) const;
    Eigen::Map<const MatX> cond_weight() const;
};

VecX time_embedding(int t, int dim);
VecX positional_augmentation(const ModelConfig& c);
// Which agent block (0 left, 1 right, 2 object) a flat index belongs to.
int agent_of_flat_index(int i);
// Raw condition input [affordance scores ; task embedding ; object features].
VecX cond_raw_vector(const DenoiserModel& m, const InteractionPrior& prior);

struct ForwardCache {
    MatX input;      // input_dim x B
    MatX cond_raw;   // cond_input_dim x B (zero col for null samples)
    std::vector<MatX> pre;  // hidden pre-activations
    std::vector<MatX> act;  // hidden activations
    std::vector<int> embed_ids;   // per sample; -1 when external vector or null
    std::vector<char> null_flags;
};

// x_t is d x B; t and cond are per column (cond[b] == nullptr -> null branch).
MatX forward_batch(const DenoiserModel& m, const MatX& x_t, const std::vector<int>& t,
                   const std::vector<const InteractionPrior*>& cond,
                   ForwardCache* cache = nullptr);
VecX forward(const DenoiserModel& m, const VecX& x_t, int t,
             const InteractionPrior* cond, ForwardCache* cache = nullptr);

// Reverse-mode gradients of the forward map. upstream is dL/dx0_hat (d x B).
// grad_params (layout.total) is accumulated into if non-null; grad_x_t is
// overwritten if non-null.
void backward_batch(const DenoiserModel& m, const ForwardCache& cache,
                    const MatX& upstream, VecX* grad_params, MatX* grad_x_t);
std::pair<VecX, VecX> backward(const DenoiserModel& m, const ForwardCache& cache,
                               const VecX& upstream);

struct TrainConfig {
    int batch_size = 16;
    double learning_rate = 1e-3;
    int steps = 500;
    double cond_mask_prob = 0.10;
    double w_diff = 1.0;
    double w_dist = 0.1;
    double w_orient = 0.1;
    uint64_t seed = 0;
};

Json train_config_to_json(const TrainConfig& c);
TrainConfig train_config_from_json(const Json& j);

struct TrainExample {
    VecX x0;  // physical units, length d
    InteractionPrior cond;
    const ObjectModel* object = nullptr;  // enables distance/orientation losses
};

struct LossBreakdown {
    double total = 0, diff = 0, dist = 0, orient = 0;
};

// Noising decisions for one batch: per-example diffusion step, Gaussian
// noise, and whether the condition is masked to null.
struct NoisedBatch {
    std::vector<int> ts;
    MatX eps;  // d x B
    std::vector<char> masked;
};

NoisedBatch draw_noised_batch(const NoiseSchedule& schedule, int d, int batch_size,
                              double mask_prob, std::mt19937_64& rng);

// Deterministic training objective at fixed noising decisions; exposed so
// gradients can be finite-difference checked end to end.
LossBreakdown training_losses_at(const DenoiserModel& m,
                                 const std::vector<const TrainExample*>& batch,
                                 const NoiseSchedule& schedule, const TrainConfig& cfg,
                                 const NoisedBatch& noised,
                                 VecX* grad_params = nullptr);

// One batch of the training objective. Samples t and noise per example,
// masks conditions independently with cond_mask_prob, and accumulates exact
// parameter gradients into grad_params when requested.
LossBreakdown training_losses(const DenoiserModel& m,
                              const std::vector<const TrainExample*>& batch,
                              const NoiseSchedule& schedule, const TrainConfig& cfg,
                              std::mt19937_64& rng, VecX* grad_params = nullptr);

struct TrainStats {
    // per step: step index, total, diff, dist, orient
    std::vector<std::array<double, 5>> curve;
};

TrainStats train(DenoiserModel& m, const std::vector<TrainExample>& dataset,
                 const TrainConfig& cfg, const NoiseSchedule& schedule);

void save_loss_curve_csv(const std::string& path, const TrainStats& stats);

// Checkpoint: magic + version + meta JSON + both nets (long-horizon main net
// and the short unconditional transition prior).
struct CheckpointBundle {
    DenoiserModel main;
    DenoiserModel transition;
    Json meta;
};

void save_checkpoint(const std::string& path, const CheckpointBundle& bundle);
CheckpointBundle load_checkpoint(const std::string& path);

}  // namespace hoiforge
