// SPDX-License-Identifier: Apache-2.0
#include "hoiforge/denoiser.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

namespace hoiforge {

namespace {

constexpr double kDistTau = 0.05;  // proximity weighting length scale, meters

double stable_sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double silu(double x) { return x * stable_sigmoid(x); }

double silu_deriv(double x) {
    const double s = stable_sigmoid(x);
    return s * (1.0 + x * (1.0 - s));
}

Eigen::Map<MatX> mut_weight(VecX& params, const ParamLayout& l, int layer) {
    return Eigen::Map<MatX>(params.data() + l.w_off[static_cast<size_t>(layer)],
                            l.w_rows[static_cast<size_t>(layer)],
                            l.w_cols[static_cast<size_t>(layer)]);
}

}  // namespace

Json model_config_to_json(const ModelConfig& c) {
    return Json{{"frames", c.frames},
                {"hidden_width", c.hidden_width},
                {"hidden_layers", c.hidden_layers},
                {"time_dim", c.time_dim},
                {"embed_dim", c.embed_dim},
                {"cond_dim", c.cond_dim},
                {"table_rows", c.table_rows},
                {"data_scale", c.data_scale},
                {"activation", c.activation}};
}

ModelConfig model_config_from_json(const Json& j) {
    ModelConfig c;
    c.frames = j.at("frames").get<int>();
    c.hidden_width = j.at("hidden_width").get<int>();
    c.hidden_layers = j.at("hidden_layers").get<int>();
    c.time_dim = j.at("time_dim").get<int>();
    c.embed_dim = j.at("embed_dim").get<int>();
    c.cond_dim = j.at("cond_dim").get<int>();
    c.table_rows = j.at("table_rows").get<int>();
    c.data_scale = j.at("data_scale").get<double>();
    c.activation = j.at("activation").get<std::string>();
    if (c.frames < 1 || c.hidden_width < 1 || c.hidden_layers < 1 || c.data_scale <= 0.0)
        throw HoiError("model config: invalid dimensions");
    if (c.activation != "silu" && c.activation != "identity")
        throw HoiError("model config: unknown activation " + c.activation);
    return c;
}

ParamLayout ParamLayout::build(const ModelConfig& c) {
    ParamLayout l;
    int off = 0;
    auto add_layer = [&](int rows, int cols) {
        l.w_off.push_back(off);
        l.w_rows.push_back(rows);
        l.w_cols.push_back(cols);
        off += rows * cols;
        l.b_off.push_back(off);
        off += rows;
    };
    add_layer(c.hidden_width, c.input_dim());
    for (int i = 1; i < c.hidden_layers; ++i) add_layer(c.hidden_width, c.hidden_width);
    add_layer(c.d(), c.hidden_width);  // output layer

    l.agent_off = off;
    off += 3;
    l.table_off = off;
    off += c.table_rows * c.embed_dim;
    l.cond_w_off = off;
    off += c.cond_dim * c.cond_input_dim();
    l.cond_b_off = off;
    off += c.cond_dim;
    l.null_off = off;
    off += c.cond_dim;
    l.total = off;
    return l;
}

DenoiserModel DenoiserModel::create(const ModelConfig& c, uint64_t seed) {
    DenoiserModel m;
    m.config = c;
    m.layout = ParamLayout::build(c);
    m.params = VecX::Zero(m.layout.total);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    for (size_t i = 0; i < m.layout.w_off.size(); ++i) {
        const double scale = 1.0 / std::sqrt(static_cast<double>(m.layout.w_cols[i]));
        double* w = m.params.data() + m.layout.w_off[i];
        const int n = m.layout.w_rows[i] * m.layout.w_cols[i];
        for (int k = 0; k < n; ++k) w[k] = g(rng) * scale;
    }
    for (int k = 0; k < c.table_rows * c.embed_dim; ++k)
        m.params[m.layout.table_off + k] = g(rng) * 0.1;
    {
        const double scale = 1.0 / std::sqrt(static_cast<double>(c.cond_input_dim()));
        for (int k = 0; k < c.cond_dim * c.cond_input_dim(); ++k)
            m.params[m.layout.cond_w_off + k] = g(rng) * scale;
    }
    for (int k = 0; k < c.cond_dim; ++k) m.params[m.layout.null_off + k] = g(rng) * 0.1;
    m.refresh_derived();
    return m;
}

DenoiserModel DenoiserModel::zeros(const ModelConfig& c) {
    DenoiserModel m;
    m.config = c;
    m.layout = ParamLayout::build(c);
    m.params = VecX::Zero(m.layout.total);
    m.refresh_derived();
    return m;
}

void DenoiserModel::refresh_derived() { pos_embed = positional_augmentation(config); }

Eigen::Map<const MatX> DenoiserModel::weight(int layer) const {
    return Eigen::Map<const MatX>(params.data() + layout.w_off[static_cast<size_t>(layer)],
                                  layout.w_rows[static_cast<size_t>(layer)],
                                  layout.w_cols[static_cast<size_t>(layer)]);
}

Eigen::Map<const MatX> DenoiserModel::cond_weight() const {
    return Eigen::Map<const MatX>(params.data() + layout.cond_w_off, config.cond_dim,
                                  config.cond_input_dim());
}

VecX time_embedding(int t, int dim) {
    VecX e(dim);
    for (int i = 0; i < dim; ++i) {
        const double freq = std::pow(10000.0, -2.0 * (i / 2) / static_cast<double>(dim));
        const double arg = t * freq;
        e[i] = (i % 2 == 0) ? std::sin(arg) : std::cos(arg);
    }
    return e;
}

int agent_of_flat_index(int i) {
    const int k = i % kFrameDim;
    if (k < kRightOffset) return 0;
    if (k < kObjectOffset) return 1;
    return 2;
}

VecX positional_augmentation(const ModelConfig& c) {
    VecX pe(c.d());
    for (int f = 0; f < c.frames; ++f) {
        for (int k = 0; k < kFrameDim; ++k) {
            const int ch = k % 64;
            const double freq = std::pow(10000.0, -2.0 * (ch / 2) / 64.0);
            const double arg = f * freq;
            pe[f * kFrameDim + k] = (ch % 2 == 0) ? std::sin(arg) : std::cos(arg);
        }
    }
    return pe;
}

VecX cond_raw_vector(const DenoiserModel& m, const InteractionPrior& prior) {
    const ModelConfig& c = m.config;
    if (prior.affordance.scores.size() != kCondScoreDim)
        throw HoiError("interaction prior: affordance scores must have " +
                       std::to_string(kCondScoreDim) + " entries");
    if (prior.object_features.size() != kObjectFeatureDim)
        throw HoiError("interaction prior: object features must have " +
                       std::to_string(kObjectFeatureDim) + " entries");
    VecX raw(c.cond_input_dim());
    raw.segment(0, kCondScoreDim) = prior.affordance.scores;
    if (prior.embedding_id >= 0) {
        if (prior.embedding_id >= c.table_rows)
            throw HoiError("interaction prior: embedding id out of range");
        raw.segment(kCondScoreDim, c.embed_dim) =
            m.params.segment(m.layout.table_off + prior.embedding_id * c.embed_dim,
                             c.embed_dim);
    } else {
        if (prior.subtask_embedding.size() != c.embed_dim)
            throw HoiError("interaction prior: embedding width mismatch");
        raw.segment(kCondScoreDim, c.embed_dim) = prior.subtask_embedding;
    }
    raw.segment(kCondScoreDim + c.embed_dim, kObjectFeatureDim) = prior.object_features;
    return raw;
}

MatX forward_batch(const DenoiserModel& m, const MatX& x_t, const std::vector<int>& t,
                   const std::vector<const InteractionPrior*>& cond, ForwardCache* cache) {
    const ModelConfig& c = m.config;
    const int B = static_cast<int>(x_t.cols());
    if (x_t.rows() != c.d()) throw HoiError("forward: x_t dimension mismatch");
    if (static_cast<int>(t.size()) != B || static_cast<int>(cond.size()) != B)
        throw HoiError("forward: batch size mismatch");

    MatX input(c.input_dim(), B);
    MatX cond_raw = MatX::Zero(c.cond_input_dim(), B);
    std::vector<int> embed_ids(static_cast<size_t>(B), -1);
    std::vector<char> null_flags(static_cast<size_t>(B), 0);

    const double a_left = m.params[m.layout.agent_off + 0];
    const double a_right = m.params[m.layout.agent_off + 1];
    const double a_obj = m.params[m.layout.agent_off + 2];
    const VecX null_vec = m.params.segment(m.layout.null_off, c.cond_dim);
    const auto cond_w = m.cond_weight();
    const VecX cond_b = m.params.segment(m.layout.cond_b_off, c.cond_dim);

    for (int b = 0; b < B; ++b) {
        VecX x_aug = x_t.col(b) + m.pos_embed;
        for (int i = 0; i < c.d(); ++i) {
            const int a = agent_of_flat_index(i);
            x_aug[i] += a == 0 ? a_left : (a == 1 ? a_right : a_obj);
        }
        input.col(b).segment(0, c.d()) = x_aug;
        input.col(b).segment(c.d(), c.time_dim) = time_embedding(t[static_cast<size_t>(b)], c.time_dim);
        if (cond[static_cast<size_t>(b)] == nullptr) {
            null_flags[static_cast<size_t>(b)] = 1;
            input.col(b).segment(c.d() + c.time_dim, c.cond_dim) = null_vec;
        } else {
            const InteractionPrior& prior = *cond[static_cast<size_t>(b)];
            VecX raw = cond_raw_vector(m, prior);
            cond_raw.col(b) = raw;
            embed_ids[static_cast<size_t>(b)] = prior.embedding_id;
            input.col(b).segment(c.d() + c.time_dim, c.cond_dim) = cond_w * raw + cond_b;
        }
    }

    const bool linear = c.activation == "identity";
    std::vector<MatX> pre(static_cast<size_t>(c.hidden_layers));
    std::vector<MatX> act(static_cast<size_t>(c.hidden_layers));
    const MatX* below = &input;
    for (int i = 0; i < c.hidden_layers; ++i) {
        const VecX bias = m.params.segment(m.layout.b_off[static_cast<size_t>(i)],
                                           m.layout.w_rows[static_cast<size_t>(i)]);
        pre[static_cast<size_t>(i)] = (m.weight(i) * (*below)).colwise() + bias;
        act[static_cast<size_t>(i)] =
            linear ? pre[static_cast<size_t>(i)]
                   : pre[static_cast<size_t>(i)].unaryExpr([](double v) { return silu(v); });
        below = &act[static_cast<size_t>(i)];
    }
    const int out_layer = c.hidden_layers;
    const VecX out_bias = m.params.segment(m.layout.b_off[static_cast<size_t>(out_layer)], c.d());
    MatX out = (m.weight(out_layer) * (*below)).colwise() + out_bias;
    if (!out.allFinite()) throw HoiError("forward: non-finite output");

    if (cache) {
        cache->input = std::move(input);
        cache->cond_raw = std::move(cond_raw);
        cache->pre = std::move(pre);
        cache->act = std::move(act);
        cache->embed_ids = std::move(embed_ids);
        cache->null_flags = std::move(null_flags);
    }
    return out;
}

VecX forward(const DenoiserModel& m, const VecX& x_t, int t,
             const InteractionPrior* cond, ForwardCache* cache) {
    MatX xt(x_t.size(), 1);
    xt.col(0) = x_t;
    return forward_batch(m, xt, {t}, {cond}, cache).col(0);
}

void backward_batch(const DenoiserModel& m, const ForwardCache& cache,
                    const MatX& upstream, VecX* grad_params, MatX* grad_x_t) {
    const ModelConfig& c = m.config;
    const int B = static_cast<int>(upstream.cols());
    if (upstream.rows() != c.d()) throw HoiError("backward: upstream dimension mismatch");

    const int out_layer = c.hidden_layers;
    MatX g = upstream;  // gradient flowing down, starts at the output layer
    // Walk layers top-down; `above` is the activation feeding each layer.
    for (int i = out_layer; i >= 0; --i) {
        const MatX& below_act =
            i == 0 ? cache.input : cache.act[static_cast<size_t>(i - 1)];
        if (grad_params) {
            Eigen::Map<MatX> gw(grad_params->data() + m.layout.w_off[static_cast<size_t>(i)],
                                m.layout.w_rows[static_cast<size_t>(i)],
                                m.layout.w_cols[static_cast<size_t>(i)]);
            gw.noalias() += g * below_act.transpose();
            Eigen::Map<VecX> gb(grad_params->data() + m.layout.b_off[static_cast<size_t>(i)],
                                m.layout.w_rows[static_cast<size_t>(i)]);
            gb += g.rowwise().sum();
        }
        MatX down = m.weight(i).transpose() * g;
        if (i > 0) {
            if (c.activation == "identity") {
                g = std::move(down);
            } else {
                const MatX& pre = cache.pre[static_cast<size_t>(i - 1)];
                g = down.array() *
                    pre.unaryExpr([](double v) { return silu_deriv(v); }).array();
            }
        } else {
            g = std::move(down);  // gradient w.r.t. the full input vector
        }
    }

    if (grad_x_t) *grad_x_t = g.topRows(c.d());
    if (!grad_params) return;

    // Agent scalars: one shared offset per agent block.
    for (int b = 0; b < B; ++b) {
        double ga[3] = {0, 0, 0};
        for (int i = 0; i < c.d(); ++i) ga[agent_of_flat_index(i)] += g(i, b);
        for (int a = 0; a < 3; ++a) (*grad_params)[m.layout.agent_off + a] += ga[a];
    }

    // Condition pathway.
    const MatX gc = g.middleRows(c.d() + c.time_dim, c.cond_dim);
    Eigen::Map<MatX> g_cond_w(grad_params->data() + m.layout.cond_w_off, c.cond_dim,
                              c.cond_input_dim());
    Eigen::Map<VecX> g_cond_b(grad_params->data() + m.layout.cond_b_off, c.cond_dim);
    Eigen::Map<VecX> g_null(grad_params->data() + m.layout.null_off, c.cond_dim);
    const auto cond_w = m.cond_weight();
    for (int b = 0; b < B; ++b) {
        if (cache.null_flags[static_cast<size_t>(b)]) {
            g_null += gc.col(b);
            continue;
        }
        g_cond_b += gc.col(b);
        g_cond_w.noalias() += gc.col(b) * cache.cond_raw.col(b).transpose();
        const int id = cache.embed_ids[static_cast<size_t>(b)];
        if (id >= 0) {
            Eigen::Map<VecX> g_row(grad_params->data() + m.layout.table_off + id * c.embed_dim,
                                   c.embed_dim);
            g_row.noalias() +=
                cond_w.middleCols(kCondScoreDim, c.embed_dim).transpose() * gc.col(b);
        }
    }
}

std::pair<VecX, VecX> backward(const DenoiserModel& m, const ForwardCache& cache,
                               const VecX& upstream) {
    MatX up(upstream.size(), 1);
    up.col(0) = upstream;
    VecX grad_params = VecX::Zero(m.layout.total);
    MatX grad_x(m.config.d(), 1);
    backward_batch(m, cache, up, &grad_params, &grad_x);
    return {grad_params, grad_x.col(0)};
}

Json train_config_to_json(const TrainConfig& c) {
    return Json{{"batch_size", c.batch_size},   {"learning_rate", c.learning_rate},
                {"steps", c.steps},             {"cond_mask_prob", c.cond_mask_prob},
                {"w_diff", c.w_diff},           {"w_dist", c.w_dist},
                {"w_orient", c.w_orient},       {"seed", c.seed}};
}

TrainConfig train_config_from_json(const Json& j) {
    TrainConfig c;
    c.batch_size = j.at("batch_size").get<int>();
    c.learning_rate = j.at("learning_rate").get<double>();
    c.steps = j.at("steps").get<int>();
    c.cond_mask_prob = j.at("cond_mask_prob").get<double>();
    c.w_diff = j.at("w_diff").get<double>();
    c.w_dist = j.at("w_dist").get<double>();
    c.w_orient = j.at("w_orient").get<double>();
    c.seed = j.at("seed").get<uint64_t>();
    if (c.cond_mask_prob < 0.0 || c.cond_mask_prob > 1.0)
        throw HoiError("train config: cond_mask_prob outside [0,1]");
    return c;
}

namespace {

// Distance-map loss: proximity-weighted squared error between predicted and
// true per-joint signed distances, under the ground-truth object pose.
// Gradients flow into predicted joint coordinates only (pose frozen).
double distance_loss(const ObjectModel& obj, const VecX& x0_phys,
                     const VecX& pred_phys, int frames, MatX& grad_phys, int col,
                     double inv_count) {
    double loss = 0.0;
    for (int f = 0; f < frames; ++f) {
        ObjectPose pose;
        pose.position = Vec3(x0_phys[flat_object_pos_index(f, 0)],
                             x0_phys[flat_object_pos_index(f, 1)],
                             x0_phys[flat_object_pos_index(f, 2)]);
        for (int cq = 0; cq < 4; ++cq)
            pose.orientation[cq] = x0_phys[flat_object_quat_index(f, cq)];
        for (Hands hand : {Hands::Left, Hands::Right}) {
            for (int j = 0; j < kNumJoints; ++j) {
                Vec3 p_gt, p_pred;
                for (int ax = 0; ax < 3; ++ax) {
                    const int idx = flat_joint_index(f, hand, j, ax);
                    p_gt[ax] = x0_phys[idx];
                    p_pred[ax] = pred_phys[idx];
                }
                const double d_gt = sdf_query_posed(obj, pose, p_gt).distance;
                SdfResult r = sdf_query_posed(obj, pose, p_pred);
                const double w = std::exp(-d_gt / kDistTau);
                const double diff = r.distance - d_gt;
                loss += w * diff * diff * inv_count;
                const Vec3 gj = (2.0 * w * diff * inv_count) * r.gradient;
                for (int ax = 0; ax < 3; ++ax)
                    grad_phys(flat_joint_index(f, hand, j, ax), col) += gj[ax];
            }
        }
    }
    return loss;
}

// Squared geodesic error between predicted and true wrist-to-object relative
// quaternions, with gradients through quaternion normalization.
double orientation_loss(const VecX& x0_phys, const VecX& pred_phys, int frames,
                        MatX& grad_phys, int col, double inv_count) {
    const Eigen::Matrix4d conj_mat =
        Eigen::Vector4d(1, -1, -1, -1).asDiagonal().toDenseMatrix();
    double loss = 0.0;
    for (int f = 0; f < frames; ++f) {
        Vec4 q_obj_raw, q_obj_gt;
        for (int cq = 0; cq < 4; ++cq) {
            q_obj_raw[cq] = pred_phys[flat_object_quat_index(f, cq)];
            q_obj_gt[cq] = x0_phys[flat_object_quat_index(f, cq)];
        }
        for (Hands hand : {Hands::Left, Hands::Right}) {
            Vec4 q_w_raw, q_w_gt;
            for (int cq = 0; cq < 4; ++cq) {
                q_w_raw[cq] = pred_phys[flat_wrist_quat_index(f, hand, cq)];
                q_w_gt[cq] = x0_phys[flat_wrist_quat_index(f, hand, cq)];
            }
            if (q_w_raw.norm() < 1e-8 || q_obj_raw.norm() < 1e-8 ||
                q_w_gt.norm() < 1e-8 || q_obj_gt.norm() < 1e-8)
                continue;  // degenerate prediction: no angle, no gradient
            const Vec4 qw = q_w_raw.normalized();
            const Vec4 qo = q_obj_raw.normalized();
            const Vec4 r_pred = quat_mul(quat_conjugate(qw), qo);
            const Vec4 r_gt =
                quat_mul(quat_conjugate(q_w_gt.normalized()), q_obj_gt.normalized());
            const double dot = r_pred.dot(r_gt);
            const double cval = std::abs(dot);
            loss += geodesic_angle_sq(cval) * inv_count;
            const double sign = dot >= 0.0 ? 1.0 : -1.0;
            const Vec4 dl_dr = geodesic_angle_sq_dc(cval) * sign * inv_count * r_gt;
            // r = R(qo) * conj_mat * qw = L(conj(qw)) * qo
            const Vec4 g_qw_hat = (quat_right_matrix(qo) * conj_mat).transpose() * dl_dr;
            const Vec4 g_qo_hat = quat_left_matrix(quat_conjugate(qw)).transpose() * dl_dr;
            const Vec4 g_qw = normalize_jacobian(q_w_raw).transpose() * g_qw_hat;
            const Vec4 g_qo = normalize_jacobian(q_obj_raw).transpose() * g_qo_hat;
            for (int cq = 0; cq < 4; ++cq) {
                grad_phys(flat_wrist_quat_index(f, hand, cq), col) += g_qw[cq];
                grad_phys(flat_object_quat_index(f, cq), col) += g_qo[cq];
            }
        }
    }
    return loss;
}

}  // namespace

NoisedBatch draw_noised_batch(const NoiseSchedule& schedule, int d, int batch_size,
                              double mask_prob, std::mt19937_64& rng) {
    NoisedBatch nb;
    nb.ts.resize(static_cast<size_t>(batch_size));
    nb.eps.resize(d, batch_size);
    nb.masked.resize(static_cast<size_t>(batch_size));
    std::uniform_int_distribution<int> t_dist(1, schedule.T);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    for (int b = 0; b < batch_size; ++b) {
        nb.ts[static_cast<size_t>(b)] = t_dist(rng);
        nb.masked[static_cast<size_t>(b)] = u01(rng) < mask_prob ? 1 : 0;
        nb.eps.col(b) = gaussian_vector(rng, d);
    }
    return nb;
}

LossBreakdown training_losses_at(const DenoiserModel& m,
                                 const std::vector<const TrainExample*>& batch,
                                 const NoiseSchedule& schedule, const TrainConfig& cfg,
                                 const NoisedBatch& noised, VecX* grad_params) {
    if (batch.empty()) throw HoiError("training_losses: empty batch");
    const ModelConfig& c = m.config;
    const int B = static_cast<int>(batch.size());
    const int d = c.d();
    const double scale = c.data_scale;
    if (static_cast<int>(noised.ts.size()) != B || noised.eps.cols() != B)
        throw HoiError("training_losses: noised batch size mismatch");

    MatX x0_model(d, B), x_t(d, B);
    std::vector<const InteractionPrior*> conds(static_cast<size_t>(B));
    for (int b = 0; b < B; ++b) {
        const TrainExample& ex = *batch[static_cast<size_t>(b)];
        if (ex.x0.size() != d) throw HoiError("training_losses: example length mismatch");
        x0_model.col(b) = ex.x0 / scale;
        conds[static_cast<size_t>(b)] = noised.masked[static_cast<size_t>(b)] ? nullptr : &ex.cond;
        x_t.col(b) = forward_diffuse(schedule, x0_model.col(b),
                                     noised.ts[static_cast<size_t>(b)], noised.eps.col(b));
    }

    ForwardCache cache;
    MatX pred_model = forward_batch(m, x_t, noised.ts, conds, &cache);

    LossBreakdown out;
    MatX upstream = MatX::Zero(d, B);

    // Diffusion term: per-example MSE over all d scalars, averaged over batch.
    const double inv_bd = 1.0 / (static_cast<double>(B) * d);
    MatX resid = pred_model - x0_model;
    out.diff = resid.squaredNorm() * inv_bd;
    upstream += cfg.w_diff * 2.0 * inv_bd * resid;

    // Geometry-aware terms operate in physical units.
    MatX grad_dist = MatX::Zero(d, B);
    MatX grad_orient = MatX::Zero(d, B);
    const double inv_dist_count =
        1.0 / (static_cast<double>(B) * c.frames * 2 * kNumJoints);
    const double inv_orient_count = 1.0 / (static_cast<double>(B) * c.frames * 2);
    for (int b = 0; b < B; ++b) {
        const TrainExample& ex = *batch[static_cast<size_t>(b)];
        if (ex.object == nullptr) continue;
        VecX pred_phys = scale * pred_model.col(b);
        out.dist += distance_loss(*ex.object, ex.x0, pred_phys, c.frames, grad_dist, b,
                                  inv_dist_count);
        out.orient +=
            orientation_loss(ex.x0, pred_phys, c.frames, grad_orient, b, inv_orient_count);
    }
    // Chain back to model space: physical = data_scale * model prediction.
    upstream.noalias() += (scale * cfg.w_dist) * grad_dist;
    upstream.noalias() += (scale * cfg.w_orient) * grad_orient;

    out.total = cfg.w_diff * out.diff + cfg.w_dist * out.dist + cfg.w_orient * out.orient;

    if (grad_params) backward_batch(m, cache, upstream, grad_params, nullptr);
    return out;
}

LossBreakdown training_losses(const DenoiserModel& m,
                              const std::vector<const TrainExample*>& batch,
                              const NoiseSchedule& schedule, const TrainConfig& cfg,
                              std::mt19937_64& rng, VecX* grad_params) {
    NoisedBatch nb = draw_noised_batch(schedule, m.config.d(),
                                       static_cast<int>(batch.size()),
                                       cfg.cond_mask_prob, rng);
    return training_losses_at(m, batch, schedule, cfg, nb, grad_params);
}

TrainStats train(DenoiserModel& m, const std::vector<TrainExample>& dataset,
                 const TrainConfig& cfg, const NoiseSchedule& schedule) {
    if (dataset.empty()) throw HoiError("train: empty dataset");
    TrainStats stats;
    std::mt19937_64 rng(cfg.seed);
    std::uniform_int_distribution<size_t> pick(0, dataset.size() - 1);
    VecX mom = VecX::Zero(m.layout.total);
    VecX vel = VecX::Zero(m.layout.total);
    const double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    for (int step = 1; step <= cfg.steps; ++step) {
        std::vector<const TrainExample*> batch;
        batch.reserve(static_cast<size_t>(cfg.batch_size));
        for (int b = 0; b < cfg.batch_size; ++b) batch.push_back(&dataset[pick(rng)]);
        VecX grad = VecX::Zero(m.layout.total);
        LossBreakdown loss = training_losses(m, batch, schedule, cfg, rng, &grad);
        if (!std::isfinite(loss.total))
            throw HoiError("train: non-finite loss at step " + std::to_string(step) +
                           " (diff " + std::to_string(loss.diff) + ", dist " +
                           std::to_string(loss.dist) + ", orient " +
                           std::to_string(loss.orient) + ")");
        mom = beta1 * mom + (1.0 - beta1) * grad;
        vel = beta2 * vel + (1.0 - beta2) * grad.cwiseProduct(grad);
        const double bc1 = 1.0 - std::pow(beta1, step);
        const double bc2 = 1.0 - std::pow(beta2, step);
        m.params.array() -=
            cfg.learning_rate * (mom.array() / bc1) / ((vel.array() / bc2).sqrt() + eps);
        stats.curve.push_back({static_cast<double>(step), loss.total, loss.diff,
                               loss.dist, loss.orient});
    }
    return stats;
}

void save_loss_curve_csv(const std::string& path, const TrainStats& stats) {
    std::ofstream out(path);
    if (!out) throw HoiError("cannot write " + path);
    out << "step,total,diff,dist,orient\n";
    char buf[256];
    for (const auto& row : stats.curve) {
        std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.17g\n",
                      static_cast<int>(row[0]), row[1], row[2], row[3], row[4]);
        out << buf;
    }
}

namespace {

void write_u64(std::ofstream& out, uint64_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

uint64_t read_u64(std::ifstream& in) {
    uint64_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    if (!in) throw HoiError("checkpoint: truncated file");
    return v;
}

void write_model(std::ofstream& out, const DenoiserModel& m) {
    const std::string cfg = model_config_to_json(m.config).dump();
    write_u64(out, cfg.size());
    out.write(cfg.data(), static_cast<std::streamsize>(cfg.size()));
    write_u64(out, static_cast<uint64_t>(m.params.size()));
    out.write(reinterpret_cast<const char*>(m.params.data()),
              static_cast<std::streamsize>(m.params.size() * sizeof(double)));
}

DenoiserModel read_model(std::ifstream& in) {
    const uint64_t cfg_len = read_u64(in);
    std::string cfg(cfg_len, '\0');
    in.read(cfg.data(), static_cast<std::streamsize>(cfg_len));
    if (!in) throw HoiError("checkpoint: truncated config");
    DenoiserModel m;
    m.config = model_config_from_json(Json::parse(cfg));
    m.layout = ParamLayout::build(m.config);
    const uint64_t n = read_u64(in);
    if (n != static_cast<uint64_t>(m.layout.total))
        throw HoiError("checkpoint: parameter count disagrees with config");
    m.params.resize(static_cast<Eigen::Index>(n));
    in.read(reinterpret_cast<char*>(m.params.data()),
            static_cast<std::streamsize>(n * sizeof(double)));
    if (!in) throw HoiError("checkpoint: truncated parameters");
    m.refresh_derived();
    return m;
}

}  // namespace

void save_checkpoint(const std::string& path, const CheckpointBundle& bundle) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw HoiError("cannot write " + path);
    out.write("HOIF", 4);
    const uint32_t version = 1;
    out.write(reinterpret_cast<const char*>(&version), sizeof(version));
    const std::string meta = bundle.meta.dump();
    write_u64(out, meta.size());
    out.write(meta.data(), static_cast<std::streamsize>(meta.size()));
    write_model(out, bundle.main);
    write_model(out, bundle.transition);
}

CheckpointBundle load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw HoiError("cannot open " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "HOIF", 4) != 0)
        throw HoiError("checkpoint: bad magic in " + path);
    uint32_t version = 0;
    in.read(reinterpret_cast<char*>(&version), sizeof(version));
    if (!in || version != 1) throw HoiError("checkpoint: unsupported version");
    const uint64_t meta_len = read_u64(in);
    std::string meta(meta_len, '\0');
    in.read(meta.data(), static_cast<std::streamsize>(meta_len));
    if (!in) throw HoiError("checkpoint: truncated meta");
    CheckpointBundle bundle;
    bundle.meta = Json::parse(meta);
    bundle.main = read_model(in);
    bundle.transition = read_model(in);
    return bundle;
}

}  // namespace hoiforge
