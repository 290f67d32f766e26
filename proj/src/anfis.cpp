#include "dstyle/anfis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dstyle/errors.hpp"
#include "dstyle/random.hpp"
#include "dstyle/simd/kernels.hpp"

namespace dstyle {

double mf_eval(const BellMF& mf, double x) {
    const double z = std::abs((x - mf.e) / mf.a);
    return 1.0 / (1.0 + std::pow(z, 2.0 * mf.b));
}

AnfisModel AnfisModel::grid_initialized() {
    AnfisModel m;
    for (auto& input : m.mfs) {
        input[0] = {0.25, 2.0, 0.0};
        input[1] = {0.25, 2.0, 0.5};
        input[2] = {0.25, 2.0, 1.0};
    }
    m.consequents.fill(0.0);
    return m;
}

std::array<double, 9> memberships(const AnfisModel& model, const Vec3& x) {
    std::array<double, 9> mu{};
    for (std::size_t i = 0; i < kAnfisInputs; ++i) {
        for (std::size_t l = 0; l < kAnfisLabels; ++l) mu[3 * i + l] = mf_eval(model.mfs[i][l], x[i]);
    }
    return mu;
}

RuleVector firing_strengths(const AnfisModel& model, const Vec3& x) {
    const auto mu = memberships(model, x);
    RuleVector w{};
    for (std::size_t j = 0; j < kAnfisRules; ++j) {
        const auto [i1, i2, i3] = rule_labels(j);
        w[j] = (mu[i1] * mu[3 + i2]) * mu[6 + i3];
    }
    return w;
}

double infer(const AnfisModel& model, const Vec3& x) {
    const auto w = firing_strengths(model, x);
    double num = 0.0;
    double den = 0.0;
    for (std::size_t j = 0; j < kAnfisRules; ++j) {
        num += w[j] * model.consequents[j];
        den += w[j];
    }
    if (!(den > kMinFiringSum)) throw NumericError("ANFIS: no rule fired (sum of firing strengths ~ 0)");
    return num / den;
}

std::vector<double> infer_batch(const AnfisModel& model, std::span<const Vec3> xs) {
    std::vector<double> mu(9 * xs.size());
    for (std::size_t s = 0; s < xs.size(); ++s) {
        const auto m = memberships(model, xs[s]);
        std::copy(m.begin(), m.end(), mu.begin() + static_cast<std::ptrdiff_t>(9 * s));
    }
    std::vector<double> num(xs.size());
    std::vector<double> den(xs.size());
    simd::active_kernels().rule_forward(mu.data(), xs.size(), model.consequents.data(), nullptr, num.data(),
                                        den.data());
    for (std::size_t s = 0; s < xs.size(); ++s) {
        if (!(den[s] > kMinFiringSum)) throw NumericError("ANFIS: no rule fired (sum of firing strengths ~ 0)");
        num[s] /= den[s];
    }
    return num;
}

int argmax_style(const std::array<double, 3>& outputs) {
    int best = 0;
    for (int s = 1; s < 3; ++s) {
        if (outputs[static_cast<std::size_t>(s)] > outputs[static_cast<std::size_t>(best)]) best = s;
    }
    return best;
}

Classification classify(const ClassifierBank& bank, const Vec3& x_normalized) {
    Classification c;
    for (std::size_t s = 0; s < 3; ++s) c.outputs[s] = infer(bank.models[s], x_normalized);
    c.style = argmax_style(c.outputs);
    return c;
}

std::size_t ConfusionMatrix::total() const {
    std::size_t t = 0;
    for (auto c : counts) t += c;
    return t;
}

std::size_t ConfusionMatrix::correct() const {
    std::size_t t = 0;
    for (std::size_t i = 0; i < k; ++i) t += at(i, i);
    return t;
}

double ConfusionMatrix::accuracy() const {
    const auto t = total();
    return t == 0 ? std::numeric_limits<double>::quiet_NaN()
                  : static_cast<double>(correct()) / static_cast<double>(t);
}

std::vector<double> ConfusionMatrix::per_class_by_row() const {
    std::vector<double> out(k);
    for (std::size_t i = 0; i < k; ++i) {
        std::size_t row = 0;
        for (std::size_t j = 0; j < k; ++j) row += at(i, j);
        out[i] = row == 0 ? std::numeric_limits<double>::quiet_NaN()
                          : static_cast<double>(at(i, i)) / static_cast<double>(row);
    }
    return out;
}

std::vector<double> ConfusionMatrix::per_class_by_column() const {
    std::vector<double> out(k);
    for (std::size_t j = 0; j < k; ++j) {
        std::size_t col = 0;
        for (std::size_t i = 0; i < k; ++i) col += at(i, j);
        out[j] = col == 0 ? std::numeric_limits<double>::quiet_NaN()
                          : static_cast<double>(at(j, j)) / static_cast<double>(col);
    }
    return out;
}

ConfusionMatrix evaluate(const ClassifierBank& bank, std::span<const LabeledVector> test_set) {
    if (test_set.empty()) throw ValidationError("evaluate: empty test set");
    ConfusionMatrix cm;
    for (const auto& lv : test_set) {
        if (lv.style < 0 || lv.style > 2) throw ValidationError("evaluate: style label out of range");
        const auto c = classify(bank, lv.x);
        ++cm.at(static_cast<std::size_t>(lv.style), static_cast<std::size_t>(c.style));
    }
    return cm;
}

Split stratified_split(std::span<const int> labels, double train_fraction, std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw ValidationError("stratified_split: train fraction must lie in (0, 1)");
    }
    int max_label = -1;
    for (int l : labels) {
        if (l < 0) throw ValidationError("stratified_split: negative label");
        max_label = std::max(max_label, l);
    }
    Rng rng(seed);
    Split split;
    for (int cls = 0; cls <= max_label; ++cls) {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < labels.size(); ++i) {
            if (labels[i] == cls) idx.push_back(i);
        }
        for (std::size_t i = idx.size(); i > 1; --i) std::swap(idx[i - 1], idx[rng.below(i)]);
        auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(idx.size())));
        if (idx.size() >= 2) n_train = std::clamp<std::size_t>(n_train, 1, idx.size() - 1);
        split.train.insert(split.train.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
        split.test.insert(split.test.end(), idx.begin() + static_cast<std::ptrdiff_t>(n_train), idx.end());
    }
    std::sort(split.train.begin(), split.train.end());
    std::sort(split.test.begin(), split.test.end());
    return split;
}

ClassifierBank train_bank(std::span<const LabeledVector> train_set, const Scaler& scaler,
                          const TrainConfig& cfg, std::array<std::vector<double>, 3>* rmse_history) {
    ClassifierBank bank;
    bank.scaler = scaler;
    for (std::size_t s = 0; s < 3; ++s) {
        std::vector<TrainSample> data;
        data.reserve(train_set.size());
        for (const auto& lv : train_set) {
            data.push_back({lv.x, lv.style == static_cast<int>(s) ? 1.0 : 0.0});
        }
        auto result = train_hybrid(data, cfg);
        bank.models[s] = result.model;
        if (rmse_history) (*rmse_history)[s] = std::move(result.rmse_per_epoch);
    }
    return bank;
}

}  // namespace dstyle
