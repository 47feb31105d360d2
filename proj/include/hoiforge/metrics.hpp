// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "hoiforge/object.hpp"
#include "hoiforge/types.hpp"

#include <random>
#include <vector>

namespace hoiforge {

// Evaluation metrics, defined operationally at desk scale. The feature space
// is a deterministic hand-crafted descriptor, not a learned embedding, so
// absolute distributional scores are only meaningful relative to each other
// (orderings and ablation deltas), never against externally reported tables.

inline constexpr int kMotionFeatureDim = 64;

// Fixed-width per-sequence descriptor. Layout: one 24-entry block per hand
// (velocity/acceleration magnitude mean and std, five fingertip velocity
// means, ten pairwise fingertip mean distances, wrist mean height, aperture
// mean and std, wrist mean speed, strict contact fraction), an 8-entry object
// block (path length, net displacement, mean and max speed, net height
// change, total rotation, height mean and std) and an 8-entry cross block
// (wrist-wrist distance mean and std, per-hand wrist-to-object mean
// distances, per-hand fingertip-to-object-center mean distances, per-hand
// loose contact fractions). Contact entries need the object and are 0 when it
// is absent. Throws HoiError on an empty sequence.
VecX motion_features(const HoiSequence& seq, const ObjectModel* obj = nullptr);

std::vector<VecX> corpus_features(const std::vector<HoiSequence>& set,
                                  const ObjectModel* obj = nullptr);

// Mean per-joint position error in millimeters, averaged over frames, hands,
// and joints. Requires equal, nonzero frame counts.
double mpjpe(const HoiSequence& pred, const HoiSequence& gt);

// Final object location error in meters: distance between the final-frame
// object centers. Requires both sequences nonempty.
double fol(const HoiSequence& pred, const HoiSequence& gt);

// Gaussian fit with covariance shrinkage (+1e-6 I) for small corpora.
struct FeatureGaussian {
    VecX mean;
    MatX cov;
};
FeatureGaussian fit_feature_gaussian(const std::vector<VecX>& feats);

// Frechet distance between per-set Gaussian fits: |mu_a - mu_b|^2 +
// tr(S_a + S_b - 2 (S_a S_b)^{1/2}). The matrix square root uses the
// eigendecomposition of the symmetrized product sqrt(S_a) S_b sqrt(S_a) with
// negative eigenvalues clipped to zero. Requires >= 2 features per side.
double fid(const std::vector<VecX>& a, const std::vector<VecX>& b);
double fid_corpus(const std::vector<HoiSequence>& a,
                  const std::vector<HoiSequence>& b,
                  const ObjectModel* obj = nullptr);

// Mean feature distance over `pairs` random disjoint pairs (each sequence
// used at most once, so 2*pairs samples are consumed). Features are put in a
// canonical order first, making the value a function of the multiset rather
// than the container order. Throws when the set is too small.
double diversity(const std::vector<HoiSequence>& set, std::mt19937_64& rng,
                 int pairs = 100, const ObjectModel* obj = nullptr);

// The same disjoint-pair statistic within each prompt's sample set, averaged
// over prompts. Throws when any prompt group is too small or none exist.
double mmodality(const std::vector<std::vector<HoiSequence>>& prompts,
                 std::mt19937_64& rng, int pairs = 10,
                 const ObjectModel* obj = nullptr);

// Mean over frames of the overlap volume between joint spheres and the
// object, in cm^3: each sphere is voxelized at 2 mm and voxel centers with
// negative sdf count toward the overlap.
double intersection_volume(const HoiSequence& seq, const ObjectModel& obj);

// Max over frames and joints of max(0, radius - sdf(center)), in mm.
double max_penetration_depth(const HoiSequence& seq, const ObjectModel& obj);

// Smoothness of the feature-space trajectory: the sequence is cut into
// sliding windows, each window is scored by its squared Mahalanobis distance
// to the reference-corpus Gaussian, and the result is the maximum absolute
// first difference of that curve divided by the window hop in seconds.
// Requires at least two windows and >= 2 reference sequences.
double smooth_rate(const HoiSequence& seq,
                   const std::vector<HoiSequence>& reference, int window = 30,
                   int stride = 10, const ObjectModel* obj = nullptr);

// Contact consistency: the fraction of contact-phase frames (some active-hand
// contact joint within 1 cm of the marked affordance region) where nothing
// penetrates deeper than 2 mm and every active hand stays engaged. A sequence
// with no contact frames scores 0. Not comparable to externally reported
// realism numbers; the definition is our own.
double physical_realism(const HoiSequence& seq, const ObjectModel& obj,
                        const AffordanceMap& marker);

}  // namespace hoiforge
