#pragma once

// Seeded generators for the two simulated two-class curve designs and the
// train/test plus labeled/unlabeled partition protocol.

#include <cstdint>
#include <optional>
#include <vector>

#include "sfda/smoother.hpp"

namespace sfda {

enum class CaseKind { Case1, Case2 };

struct SimConfig {
    CaseKind case_kind = CaseKind::Case1;
    int n = 600;
    std::uint64_t seed = 0;
    double label_fraction = 1.0;
    int train_size = 300;
    std::optional<double> noise_variance;  // overrides the case default
    std::optional<double> fixed_u;         // overrides the random amplitude draw
};

struct Partition {
    std::vector<std::size_t> train_labeled;
    std::vector<std::size_t> train_unlabeled;
    std::vector<std::size_t> test;
};

struct SimulatedDataset {
    std::vector<RawCurve> curves;
    std::vector<int> true_labels;  // 1 or 2
    std::vector<double> amplitudes;  // the u draw of each curve
    Partition partition;
};

/// Case 1: sin(c t pi) u on 50 points in [0, 2], noise variance 0.1.
double case1_signal(int group, double u, double t);
/// Case 2: u w(t) + (1 - u) v(t) on 101 points in [1, 21], noise variance 1.
double case2_signal(int group, double u, double t);
/// max(6 - |t - 11|, 0)
double case2_triangle(double t);

std::vector<double> case1_times();
std::vector<double> case2_times();

/// First n/2 curves are group 1, the rest group 2. Partition is left empty.
SimulatedDataset generate_case1(const SimConfig& config);
SimulatedDataset generate_case2(const SimConfig& config);
SimulatedDataset generate(const SimConfig& config);

/// Stratified train/test split: train_size/2 curves of each class go to
/// training. Depends only on the labels and the seed.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>>
split_train_test(const std::vector<int>& labels, int train_size, std::uint64_t seed);

/// ceil(fraction * |train|) labeled curves, every class present at least
/// once. Returns (labeled, unlabeled), each in ascending index order.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>>
choose_labeled(const std::vector<std::size_t>& train, const std::vector<int>& labels,
               double fraction, std::uint64_t seed);

/// Number of labeled curves for a fraction of `train_count`.
std::size_t labeled_count(double fraction, std::size_t train_count);

/// Populates dataset.partition.
SimulatedDataset partition(SimulatedDataset dataset, double label_fraction, std::uint64_t seed,
                           int train_size = 300);

/// splitmix64 of base + index; seeds for repetitions.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index);

} // namespace sfda
