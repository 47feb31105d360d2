// SPDX-License-Identifier: Apache-2.0
#include "hoiforge/metrics.hpp"

#include "hoiforge/geometry.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>

namespace hoiforge {

namespace {

constexpr double kVoxel = 0.002;          // IV voxel edge, meters
constexpr double kStrictContact = 0.002;  // surface proximity, meters
constexpr double kLooseContact = 0.01;

const std::array<int, 5> kFingertips = {4, 8, 12, 16, 20};

double mean_of(const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double std_of(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean_of(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size()));
}

ObjectPose frame_pose(const HoiFrame& f) {
    ObjectPose p;
    p.position = f.object.position;
    p.orientation = f.object.orientation;
    return p;
}

// Distance from the joint sphere surface to the object surface; negative
// means the sphere pokes in.
double joint_clearance(const ObjectModel& obj, const ObjectPose& pose,
                       const Vec3& center, double radius) {
    return sdf_query_posed(obj, pose, center).distance - radius;
}

}  // namespace

VecX motion_features(const HoiSequence& seq, const ObjectModel* obj) {
    const int n = seq.num_frames();
    if (n < 1) throw HoiError("motion_features: empty sequence");
    const double fps = seq.fps;

    VecX out = VecX::Zero(kMotionFeatureDim);
    for (int hand = 0; hand < 2; ++hand) {
        const int base = hand * 24;
        auto joints_of = [&](int f) -> const std::array<Vec3, kNumJoints>& {
            return hand == 0 ? seq.frames[f].left.joints
                             : seq.frames[f].right.joints;
        };

        std::vector<double> vel, acc, wrist_speed, wrist_z, aperture;
        std::array<std::vector<double>, 5> tip_vel;
        for (int f = 0; f < n; ++f) {
            const auto& j = joints_of(f);
            wrist_z.push_back(j[0].z());
            double ap = 0.0;
            for (int t : kFingertips) ap += (j[t] - j[0]).norm();
            aperture.push_back(ap / 5.0);
            if (f + 1 < n) {
                const auto& j2 = joints_of(f + 1);
                for (int q = 0; q < kNumJoints; ++q)
                    vel.push_back((j2[q] - j[q]).norm() * fps);
                wrist_speed.push_back((j2[0] - j[0]).norm() * fps);
                for (size_t t = 0; t < kFingertips.size(); ++t)
                    tip_vel[t].push_back(
                        (j2[kFingertips[t]] - j[kFingertips[t]]).norm() * fps);
            }
            if (f + 2 < n) {
                const auto& j2 = joints_of(f + 1);
                const auto& j3 = joints_of(f + 2);
                for (int q = 0; q < kNumJoints; ++q)
                    acc.push_back(
                        ((j3[q] - j2[q]) - (j2[q] - j[q])).norm() * fps * fps);
            }
        }
        out[base + 0] = mean_of(vel);
        out[base + 1] = std_of(vel);
        out[base + 2] = mean_of(acc);
        out[base + 3] = std_of(acc);
        for (size_t t = 0; t < kFingertips.size(); ++t)
            out[base + 4 + static_cast<int>(t)] = mean_of(tip_vel[t]);
        int slot = base + 9;
        for (size_t a = 0; a < kFingertips.size(); ++a) {
            for (size_t b = a + 1; b < kFingertips.size(); ++b) {
                double d = 0.0;
                for (int f = 0; f < n; ++f) {
                    const auto& j = joints_of(f);
                    d += (j[kFingertips[a]] - j[kFingertips[b]]).norm();
                }
                out[slot++] = d / n;
            }
        }
        out[base + 19] = mean_of(wrist_z);
        out[base + 20] = mean_of(aperture);
        out[base + 21] = std_of(aperture);
        out[base + 22] = mean_of(wrist_speed);
        if (obj != nullptr) {
            int touching = 0;
            for (int f = 0; f < n; ++f) {
                const ObjectPose pose = frame_pose(seq.frames[f]);
                const auto& j = joints_of(f);
                for (int cj : kContactJoints) {
                    if (joint_clearance(*obj, pose, j[cj], joint_radius(cj)) <=
                        kStrictContact) {
                        ++touching;
                        break;
                    }
                }
            }
            out[base + 23] = static_cast<double>(touching) / n;
        }
    }

    // Object block.
    {
        std::vector<double> speed, height;
        double path = 0.0, rotation = 0.0;
        for (int f = 0; f < n; ++f) {
            height.push_back(seq.frames[f].object.position.z());
            if (f + 1 < n) {
                const double step = (seq.frames[f + 1].object.position -
                                     seq.frames[f].object.position)
                                        .norm();
                path += step;
                speed.push_back(step * fps);
                const double c =
                    std::min(1.0, std::abs(seq.frames[f].object.orientation.dot(
                                      seq.frames[f + 1].object.orientation)));
                rotation += 2.0 * std::acos(c);
            }
        }
        out[48] = path;
        out[49] = (seq.frames[n - 1].object.position -
                   seq.frames[0].object.position)
                      .norm();
        out[50] = mean_of(speed);
        out[51] = speed.empty() ? 0.0
                                : *std::max_element(speed.begin(), speed.end());
        out[52] = seq.frames[n - 1].object.position.z() -
                  seq.frames[0].object.position.z();
        out[53] = rotation;
        out[54] = mean_of(height);
        out[55] = std_of(height);
    }

    // Cross block.
    {
        std::vector<double> ww;
        double lw = 0.0, rw = 0.0, lt = 0.0, rt = 0.0;
        int l_loose = 0, r_loose = 0;
        for (int f = 0; f < n; ++f) {
            const HoiFrame& fr = seq.frames[f];
            ww.push_back((fr.left.joints[0] - fr.right.joints[0]).norm());
            lw += (fr.left.joints[0] - fr.object.position).norm();
            rw += (fr.right.joints[0] - fr.object.position).norm();
            double lmin = std::numeric_limits<double>::max();
            double rmin = std::numeric_limits<double>::max();
            for (int t : kFingertips) {
                lmin = std::min(lmin,
                                (fr.left.joints[t] - fr.object.position).norm());
                rmin = std::min(rmin, (fr.right.joints[t] - fr.object.position)
                                          .norm());
            }
            lt += lmin;
            rt += rmin;
            if (obj != nullptr) {
                const ObjectPose pose = frame_pose(fr);
                for (int cj : kContactJoints) {
                    if (joint_clearance(*obj, pose, fr.left.joints[cj],
                                        joint_radius(cj)) <= kLooseContact) {
                        ++l_loose;
                        break;
                    }
                }
                for (int cj : kContactJoints) {
                    if (joint_clearance(*obj, pose, fr.right.joints[cj],
                                        joint_radius(cj)) <= kLooseContact) {
                        ++r_loose;
                        break;
                    }
                }
            }
        }
        out[56] = mean_of(ww);
        out[57] = std_of(ww);
        out[58] = lw / n;
        out[59] = rw / n;
        out[60] = lt / n;
        out[61] = rt / n;
        out[62] = static_cast<double>(l_loose) / n;
        out[63] = static_cast<double>(r_loose) / n;
    }
    return out;
}

std::vector<VecX> corpus_features(const std::vector<HoiSequence>& set,
                                  const ObjectModel* obj) {
    std::vector<VecX> out;
    out.reserve(set.size());
    for (const HoiSequence& seq : set) out.push_back(motion_features(seq, obj));
    return out;
}

double mpjpe(const HoiSequence& pred, const HoiSequence& gt) {
    if (pred.num_frames() != gt.num_frames())
        throw HoiError("mpjpe: frame count mismatch");
    const int n = pred.num_frames();
    if (n < 1) throw HoiError("mpjpe: empty sequences");
    double sum = 0.0;
    for (int f = 0; f < n; ++f) {
        for (int j = 0; j < kNumJoints; ++j) {
            sum += (pred.frames[f].left.joints[j] - gt.frames[f].left.joints[j])
                       .norm();
            sum +=
                (pred.frames[f].right.joints[j] - gt.frames[f].right.joints[j])
                    .norm();
        }
    }
    return 1000.0 * sum / (2.0 * kNumJoints * n);
}

double fol(const HoiSequence& pred, const HoiSequence& gt) {
    if (pred.num_frames() < 1 || gt.num_frames() < 1)
        throw HoiError("fol: empty sequence");
    return (pred.frames.back().object.position -
            gt.frames.back().object.position)
        .norm();
}

FeatureGaussian fit_feature_gaussian(const std::vector<VecX>& feats) {
    if (feats.empty()) throw HoiError("fit_feature_gaussian: no features");
    const int d = static_cast<int>(feats[0].size());
    FeatureGaussian g;
    g.mean = VecX::Zero(d);
    for (const VecX& f : feats) {
        if (f.size() != d)
            throw HoiError("fit_feature_gaussian: inconsistent feature width");
        g.mean += f;
    }
    g.mean /= static_cast<double>(feats.size());
    g.cov = MatX::Zero(d, d);
    for (const VecX& f : feats) {
        const VecX c = f - g.mean;
        g.cov += c * c.transpose();
    }
    g.cov /= static_cast<double>(feats.size());
    g.cov += 1e-6 * MatX::Identity(d, d);
    return g;
}

namespace {

MatX psd_sqrt(const MatX& m) {
    Eigen::SelfAdjointEigenSolver<MatX> es(0.5 * (m + m.transpose()));
    VecX vals = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * vals.asDiagonal() *
           es.eigenvectors().transpose();
}

}  // namespace

double fid(const std::vector<VecX>& a, const std::vector<VecX>& b) {
    if (a.size() < 2 || b.size() < 2)
        throw HoiError("fid: each side needs at least 2 sequences");
    const FeatureGaussian ga = fit_feature_gaussian(a);
    const FeatureGaussian gb = fit_feature_gaussian(b);
    if (ga.mean.size() != gb.mean.size())
        throw HoiError("fid: feature width mismatch");
    const MatX sqrt_a = psd_sqrt(ga.cov);
    const MatX inner = sqrt_a * gb.cov * sqrt_a;
    Eigen::SelfAdjointEigenSolver<MatX> es(0.5 * (inner + inner.transpose()));
    const double tr_sqrt = es.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
    const double value = (ga.mean - gb.mean).squaredNorm() + ga.cov.trace() +
                         gb.cov.trace() - 2.0 * tr_sqrt;
    return std::max(0.0, value);
}

double fid_corpus(const std::vector<HoiSequence>& a,
                  const std::vector<HoiSequence>& b, const ObjectModel* obj) {
    return fid(corpus_features(a, obj), corpus_features(b, obj));
}

namespace {

// Canonical multiset order so pair sampling ignores container order.
void sort_features(std::vector<VecX>& feats) {
    std::sort(feats.begin(), feats.end(), [](const VecX& x, const VecX& y) {
        return std::lexicographical_compare(x.data(), x.data() + x.size(),
                                            y.data(), y.data() + y.size());
    });
}

double disjoint_pair_mean(std::vector<VecX> feats, int pairs,
                          std::mt19937_64& rng) {
    if (pairs < 1) throw HoiError("diversity: pairs must be >= 1");
    const int n = static_cast<int>(feats.size());
    if (n < 2 * pairs)
        throw HoiError("diversity: need at least 2*pairs sequences, have " +
                       std::to_string(n));
    sort_features(feats);
    std::vector<int> idx(n);
    for (int i = 0; i < n; ++i) idx[i] = i;
    for (int i = n - 1; i > 0; --i) {
        const int j = static_cast<int>(rng() % static_cast<std::uint64_t>(i + 1));
        std::swap(idx[i], idx[j]);
    }
    double sum = 0.0;
    for (int k = 0; k < pairs; ++k)
        sum += (feats[idx[2 * k]] - feats[idx[2 * k + 1]]).norm();
    return sum / pairs;
}

}  // namespace

double diversity(const std::vector<HoiSequence>& set, std::mt19937_64& rng,
                 int pairs, const ObjectModel* obj) {
    return disjoint_pair_mean(corpus_features(set, obj), pairs, rng);
}

double mmodality(const std::vector<std::vector<HoiSequence>>& prompts,
                 std::mt19937_64& rng, int pairs, const ObjectModel* obj) {
    if (prompts.empty()) throw HoiError("mmodality: no prompt groups");
    double sum = 0.0;
    for (const auto& group : prompts)
        sum += disjoint_pair_mean(corpus_features(group, obj), pairs, rng);
    return sum / static_cast<double>(prompts.size());
}

double intersection_volume(const HoiSequence& seq, const ObjectModel& obj) {
    const int n = seq.num_frames();
    if (n < 1) return 0.0;
    const double voxel_volume = kVoxel * kVoxel * kVoxel;
    double total = 0.0;
    for (const HoiFrame& fr : seq.frames) {
        const ObjectPose pose = frame_pose(fr);
        for (const HandPose* hp : {&fr.left, &fr.right}) {
            for (int j = 0; j < kNumJoints; ++j) {
                const double r = joint_radius(j);
                // Cheap reject: sphere cannot overlap if it clears the surface.
                if (sdf_query_posed(obj, pose, hp->joints[j]).distance >= r)
                    continue;
                const int cells = static_cast<int>(std::ceil(2.0 * r / kVoxel));
                for (int xi = 0; xi < cells; ++xi) {
                    for (int yi = 0; yi < cells; ++yi) {
                        for (int zi = 0; zi < cells; ++zi) {
                            const Vec3 offset(-r + (xi + 0.5) * kVoxel,
                                              -r + (yi + 0.5) * kVoxel,
                                              -r + (zi + 0.5) * kVoxel);
                            if (offset.norm() > r) continue;
                            const Vec3 p = hp->joints[j] + offset;
                            if (sdf_query_posed(obj, pose, p).distance < 0.0)
                                total += voxel_volume;
                        }
                    }
                }
            }
        }
    }
    return 1e6 * total / n;  // m^3 -> cm^3, mean over frames
}

double max_penetration_depth(const HoiSequence& seq, const ObjectModel& obj) {
    double worst = 0.0;
    for (const HoiFrame& fr : seq.frames) {
        const ObjectPose pose = frame_pose(fr);
        for (const HandPose* hp : {&fr.left, &fr.right}) {
            for (int j = 0; j < kNumJoints; ++j) {
                const double depth =
                    joint_radius(j) -
                    sdf_query_posed(obj, pose, hp->joints[j]).distance;
                worst = std::max(worst, depth);
            }
        }
    }
    return 1000.0 * worst;
}

double smooth_rate(const HoiSequence& seq,
                   const std::vector<HoiSequence>& reference, int window,
                   int stride, const ObjectModel* obj) {
    if (window < 1 || stride < 1)
        throw HoiError("smooth_rate: window and stride must be >= 1");
    const int n = seq.num_frames();
    if (n < window + stride)
        throw HoiError("smooth_rate: sequence too short for two windows");
    if (reference.size() < 2)
        throw HoiError("smooth_rate: reference corpus needs >= 2 sequences");
    const FeatureGaussian ref =
        fit_feature_gaussian(corpus_features(reference, obj));
    const Eigen::LDLT<MatX> solver(ref.cov);

    std::vector<double> scores;
    for (int start = 0; start + window <= n; start += stride) {
        HoiSequence win;
        win.fps = seq.fps;
        win.frames.assign(seq.frames.begin() + start,
                          seq.frames.begin() + start + window);
        const VecX diff = motion_features(win, obj) - ref.mean;
        scores.push_back(diff.dot(solver.solve(diff)));
    }
    double peak = 0.0;
    for (size_t k = 1; k < scores.size(); ++k)
        peak = std::max(peak, std::abs(scores[k] - scores[k - 1]));
    return peak / (stride / seq.fps);
}

double physical_realism(const HoiSequence& seq, const ObjectModel& obj,
                        const AffordanceMap& marker) {
    const bool left = marker.left_active();
    const bool right = marker.right_active();
    if (!left && !right)
        throw HoiError("physical_realism: marker has no active hand");
    int contact = 0, good = 0;
    for (const HoiFrame& fr : seq.frames) {
        const ObjectPose pose = frame_pose(fr);
        auto engaged = [&](const HandPose& hp, const std::vector<int>& region) {
            for (int cj : kContactJoints) {
                for (int idx : region) {
                    const Vec3 p = object_to_world(pose, obj.points[idx]);
                    if ((hp.joints[cj] - p).norm() <=
                        joint_radius(cj) + kLooseContact)
                        return true;
                }
            }
            return false;
        };
        const bool l_eng = left && engaged(fr.left, marker.active_left);
        const bool r_eng = right && engaged(fr.right, marker.active_right);
        if (!l_eng && !r_eng) continue;
        ++contact;
        if (left != l_eng || right != r_eng) continue;  // a hand disengaged
        double depth = 0.0;
        for (const HandPose* hp : {&fr.left, &fr.right})
            for (int j = 0; j < kNumJoints; ++j)
                depth = std::max(
                    depth, joint_radius(j) -
                               sdf_query_posed(obj, pose, hp->joints[j]).distance);
        if (depth <= kStrictContact) ++good;
    }
    if (contact == 0) return 0.0;
    return static_cast<double>(good) / contact;
}

}  // namespace hoiforge
