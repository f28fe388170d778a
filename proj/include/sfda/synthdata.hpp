#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sfda/mat.hpp"

namespace sfda::synth {

struct LabeledSet {
    Mat inputs;
    std::vector<int> labels;  // target labels are retained for evaluation only

    int size() const { return inputs.rows; }
};

// Gaussian blobs per class; the target domain applies x' = scale * R(x) + t
// to fresh draws from the same blobs. Target train and test splits come from
// one draw split in two, so their distributions are exchangeable.
struct DomainShiftSpec {
    int class_count = 4;
    int input_dim = 2;
    Mat class_means;             // K x n_in
    double class_cov_scale = 0.15;  // isotropic covariance, cov = scale * I
    double rotation_angle = 0.0;    // radians, applied in the (0,1) coordinate plane
    Vec translation;                // length n_in
    double scale = 1.0;
    Vec target_class_weights;       // simplex, length K
    int n_source = 4000;
    int n_target_train = 2000;
    int n_target_test = 2000;
    uint64_t seed = 0;

    void validate() const;

    // K means evenly spaced on a circle of the given radius in coords (0,1),
    // starting at the given phase angle (radians).
    static Mat circle_means(int class_count, int input_dim, double radius, double phase = 0.0);
};

struct DomainPair {
    LabeledSet source;
    LabeledSet target_train;
    LabeledSet target_test;
    // standardization stats fitted on source (empty until standardize())
    Vec source_mean;
    Vec source_std;
    std::vector<std::string> warnings;
};

DomainPair generate(const DomainShiftSpec& spec);

// Shift/scale every split by the source per-dimension mean/std (population
// std). Dimensions with zero source variance are centered but not scaled and
// a warning is recorded. Target statistics are never used.
DomainPair standardize(const DomainPair& pair);

// Columnar text format: header (class_count, input_dim, split sizes, source
// stats), then one row per sample: split tag, label, values at 17 significant
// digits.
void save_dataset(const DomainPair& pair, const std::string& spec_hash, const std::string& path);

struct LoadedDataset {
    DomainPair pair;
    std::string spec_hash;
};
LoadedDataset load_dataset(const std::string& path);

} // namespace sfda::synth
