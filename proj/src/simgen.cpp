#include "sfda/simgen.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include "sfda/errors.hpp"

namespace sfda {

namespace {

constexpr std::uint64_t kSplitStream = 0x5157'4f52'4b53'504cULL;
constexpr std::uint64_t kLabelStream = 0x4c41'4245'4c53'4554ULL;

std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Fisher-Yates with explicit draws so the permutation does not depend on the
// standard library's shuffle implementation.
void shuffle(std::vector<std::size_t>& v, std::mt19937_64& rng)
{
    for (std::size_t i = v.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng() % i);
        std::swap(v[i - 1], v[j]);
    }
}

double uniform(std::mt19937_64& rng, double lo, double hi)
{
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    return lo + (hi - lo) * u;
}

// Box-Muller on explicit uniforms for cross-platform reproducibility.
double standard_normal(std::mt19937_64& rng)
{
    double u1 = 0.0;
    while (u1 <= 0.0) {
        u1 = uniform(rng, 0.0, 1.0);
    }
    const double u2 = uniform(rng, 0.0, 1.0);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

void check_config(const SimConfig& c)
{
    if (c.n < 2 || c.n % 2 != 0) {
        throw InvalidArgument("simulation: n must be even and positive");
    }
    if (c.noise_variance && *c.noise_variance < 0.0) {
        throw InvalidArgument("simulation: noise variance must be non-negative");
    }
}

template <typename Signal>
SimulatedDataset generate_with(const SimConfig& config, const std::vector<double>& times,
                               double lo1, double hi1, double lo2, double hi2,
                               double default_noise, Signal signal)
{
    check_config(config);
    std::mt19937_64 rng(splitmix64(config.seed));
    const double sd = std::sqrt(config.noise_variance.value_or(default_noise));
    SimulatedDataset out;
    out.curves.reserve(config.n);
    for (int a = 0; a < config.n; ++a) {
        const int group = a < config.n / 2 ? 1 : 2;
        const double u = config.fixed_u ? *config.fixed_u
                                        : (group == 1 ? uniform(rng, lo1, hi1) : uniform(rng, lo2, hi2));
        RawCurve c;
        c.id = "c" + std::to_string(a + 1);
        c.times = times;
        c.values.resize(times.size());
        for (std::size_t i = 0; i < times.size(); ++i) {
            c.values[i] = signal(group, u, times[i]) + sd * standard_normal(rng);
        }
        out.curves.push_back(std::move(c));
        out.true_labels.push_back(group);
        out.amplitudes.push_back(u);
    }
    return out;
}

} // namespace

double case1_signal(int group, double u, double t)
{
    const double c = group == 1 ? 1.0 : 1.02;
    return std::sin(c * t * std::numbers::pi) * u;
}

double case2_triangle(double t) { return std::max(6.0 - std::abs(t - 11.0), 0.0); }

double case2_signal(int group, double u, double t)
{
    const double w = case2_triangle(t);
    const double v = group == 1 ? w - 4.0 : w + 4.0;
    return u * w + (1.0 - u) * v;
}

std::vector<double> case1_times()
{
    std::vector<double> t(50);
    for (int i = 1; i <= 50; ++i) {
        t[i - 1] = (2.0 * i - 2.0) / 49.0;
    }
    return t;
}

std::vector<double> case2_times()
{
    std::vector<double> t(101);
    for (int i = 1; i <= 101; ++i) {
        t[i - 1] = (i + 4.0) / 5.0;
    }
    return t;
}

SimulatedDataset generate_case1(const SimConfig& config)
{
    return generate_with(config, case1_times(), 0.3, 1.3, 0.1, 0.6, 0.1, case1_signal);
}

SimulatedDataset generate_case2(const SimConfig& config)
{
    return generate_with(config, case2_times(), 0.0, 1.0, 0.0, 1.0, 1.0, case2_signal);
}

SimulatedDataset generate(const SimConfig& config)
{
    return config.case_kind == CaseKind::Case1 ? generate_case1(config) : generate_case2(config);
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>>
split_train_test(const std::vector<int>& labels, int train_size, std::uint64_t seed)
{
    std::set<int> classes(labels.begin(), labels.end());
    const std::size_t per_class = static_cast<std::size_t>(train_size) / classes.size();
    if (train_size <= 0 || static_cast<std::size_t>(train_size) % classes.size() != 0) {
        throw InvalidArgument("split: train size must be a positive multiple of the class count");
    }
    std::mt19937_64 rng(splitmix64(seed ^ kSplitStream));
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
    for (int cls : classes) {
        std::vector<std::size_t> members;
        for (std::size_t a = 0; a < labels.size(); ++a) {
            if (labels[a] == cls) {
                members.push_back(a);
            }
        }
        if (members.size() < per_class) {
            throw InvalidArgument("split: class " + std::to_string(cls) + " is too small");
        }
        shuffle(members, rng);
        train.insert(train.end(), members.begin(), members.begin() + per_class);
        test.insert(test.end(), members.begin() + per_class, members.end());
    }
    std::sort(train.begin(), train.end());
    std::sort(test.begin(), test.end());
    return {train, test};
}

std::size_t labeled_count(double fraction, std::size_t train_count)
{
    if (!(fraction > 0.0 && fraction <= 1.0)) {
        throw InvalidArgument("label fraction must lie in (0, 1]");
    }
    // tolerate representation error such as 0.1 * 300 = 30.000000000000004
    const double raw = fraction * static_cast<double>(train_count);
    const double nearest = std::round(raw);
    const double k = std::abs(raw - nearest) < 1e-9 ? nearest : std::ceil(raw);
    return std::min(static_cast<std::size_t>(k), train_count);
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>>
choose_labeled(const std::vector<std::size_t>& train, const std::vector<int>& labels,
               double fraction, std::uint64_t seed)
{
    const std::size_t k = labeled_count(fraction, train.size());
    std::set<int> classes;
    for (std::size_t a : train) {
        classes.insert(labels.at(a));
    }
    if (k < classes.size()) {
        throw InvalidArgument("label fraction too small to include every class");
    }
    std::vector<std::size_t> order = train;
    std::sort(order.begin(), order.end());
    std::mt19937_64 rng(splitmix64(seed ^ kLabelStream));
    shuffle(order, rng);

    // first member of each class in permutation order, then fill in order
    std::vector<std::size_t> labeled;
    std::vector<bool> taken(order.size(), false);
    std::set<int> seen;
    for (std::size_t i = 0; i < order.size() && seen.size() < classes.size(); ++i) {
        if (seen.insert(labels[order[i]]).second) {
            labeled.push_back(order[i]);
            taken[i] = true;
        }
    }
    for (std::size_t i = 0; i < order.size() && labeled.size() < k; ++i) {
        if (!taken[i]) {
            labeled.push_back(order[i]);
            taken[i] = true;
        }
    }
    std::vector<std::size_t> unlabeled;
    for (std::size_t i = 0; i < order.size(); ++i) {
        if (!taken[i]) {
            unlabeled.push_back(order[i]);
        }
    }
    std::sort(labeled.begin(), labeled.end());
    std::sort(unlabeled.begin(), unlabeled.end());
    return {labeled, unlabeled};
}

SimulatedDataset partition(SimulatedDataset dataset, double label_fraction, std::uint64_t seed,
                           int train_size)
{
    auto [train, test] = split_train_test(dataset.true_labels, train_size, seed);
    auto [labeled, unlabeled] = choose_labeled(train, dataset.true_labels, label_fraction, seed);
    dataset.partition = Partition{std::move(labeled), std::move(unlabeled), std::move(test)};
    return dataset;
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) { return splitmix64(base + index); }

} // namespace sfda
