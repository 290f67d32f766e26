#include <cmath>

#include "doctest.h"
#include "dstyle/anfis.hpp"
#include "dstyle/errors.hpp"
#include "dstyle/random.hpp"
#include "oracles.hpp"

using namespace dstyle;

namespace {

AnfisModel random_model(Rng& rng) {
    AnfisModel m;
    for (auto& input : m.mfs) {
        for (std::size_t l = 0; l < 3; ++l) {
            input[l] = {rng.uniform(0.15, 0.6), rng.uniform(0.8, 3.0), 0.5 * static_cast<double>(l) + rng.uniform(-0.15, 0.15)};
        }
    }
    for (auto& c : m.consequents) c = rng.uniform(-1.0, 1.5);
    return m;
}

std::vector<TrainSample> labeled_cloud(Rng& rng, std::size_t n) {
    std::vector<TrainSample> d;
    for (std::size_t i = 0; i < n; ++i) {
        TrainSample s;
        s.x = {rng.uniform(), rng.uniform(), rng.uniform()};
        s.target = (s.x[0] + 0.5 * s.x[1] - s.x[2] > 0.2) ? 1.0 : 0.0;
        d.push_back(s);
    }
    return d;
}

}  // namespace

TEST_CASE("bell membership closed forms") {
    const BellMF mf{0.25, 2.0, 0.5};
    CHECK(mf_eval(mf, 0.5) == 1.0);
    CHECK(mf_eval(mf, 0.75) == 0.5);
    CHECK(mf_eval(mf, 0.25) == 0.5);
    CHECK(mf_eval({0.5, 3.0, 0.0}, 0.5) == 0.5);
    CHECK(mf_eval(mf, 1.0) == doctest::Approx(1.0 / 17.0));
    Rng rng(4);
    for (int i = 0; i < 1000; ++i) {
        const BellMF r{rng.uniform(0.05, 1.0), rng.uniform(0.5, 4.0), rng.uniform()};
        const double x = rng.uniform(-0.5, 1.5);
        CHECK(mf_eval(r, x) == doctest::Approx(oracle::bell(r, x)).epsilon(1e-13));
    }
}

TEST_CASE("rule enumeration is THW_RMS-major") {
    CHECK(rule_index(0, 0, 0) == 0);
    CHECK(rule_index(2, 2, 2) == 26);
    CHECK(rule_index(1, 0, 2) == 11);
    for (std::size_t j = 0; j < kAnfisRules; ++j) {
        const auto l = rule_labels(j);
        CHECK(rule_index(l[0], l[1], l[2]) == j);
    }
}

TEST_CASE("grid initialization") {
    const auto m = AnfisModel::grid_initialized();
    for (const auto& input : m.mfs) {
        CHECK(input[0] == BellMF{0.25, 2.0, 0.0});
        CHECK(input[1] == BellMF{0.25, 2.0, 0.5});
        CHECK(input[2] == BellMF{0.25, 2.0, 1.0});
    }
    for (double c : m.consequents) CHECK(c == 0.0);
}

TEST_CASE("infer equals the weighted-average oracle and stays convex") {
    Rng rng(12);
    for (int t = 0; t < 500; ++t) {
        const auto m = random_model(rng);
        const Vec3 x{rng.uniform(), rng.uniform(), rng.uniform()};
        const double y = infer(m, x);
        CHECK(y == doctest::Approx(oracle::infer(m, x)).epsilon(1e-12));
        const auto [lo, hi] = std::minmax_element(m.consequents.begin(), m.consequents.end());
        CHECK(y >= *lo - 1e-12);
        CHECK(y <= *hi + 1e-12);
    }
    AnfisModel c = AnfisModel::grid_initialized();
    c.consequents.fill(0.7);
    CHECK(infer(c, {0.1, 0.9, 0.33}) == doctest::Approx(0.7).epsilon(1e-15));
}

TEST_CASE("infer_batch matches infer") {
    Rng rng(13);
    const auto m = random_model(rng);
    std::vector<Vec3> xs;
    for (int i = 0; i < 257; ++i) xs.push_back({rng.uniform(), rng.uniform(), rng.uniform()});
    const auto ys = infer_batch(m, xs);
    for (std::size_t i = 0; i < xs.size(); ++i) CHECK(ys[i] == infer(m, xs[i]));
}

TEST_CASE("no firing rule is a numeric error") {
    AnfisModel m = AnfisModel::grid_initialized();
    for (auto& input : m.mfs) {
        for (auto& mf : input) mf = {1e-3, 50.0, 0.5};
    }
    CHECK_THROWS_AS(infer(m, {0.0, 0.0, 0.0}), NumericError);
}

TEST_CASE("antecedent gradient matches central differences") {
    Rng rng(21);
    for (int t = 0; t < 5; ++t) {
        const auto m = random_model(rng);
        const auto data = labeled_cloud(rng, 60);
        const auto g = antecedent_gradient(m, data);
        for (std::size_t i = 0; i < 3; ++i) {
            for (std::size_t l = 0; l < 3; ++l) {
                for (int p = 0; p < 3; ++p) {
                    auto plus = m;
                    auto minus = m;
                    double* fp = p == 0 ? &plus.mfs[i][l].a : (p == 1 ? &plus.mfs[i][l].b : &plus.mfs[i][l].e);
                    double* fm = p == 0 ? &minus.mfs[i][l].a : (p == 1 ? &minus.mfs[i][l].b : &minus.mfs[i][l].e);
                    const double h = 1e-6 * std::max(1.0, std::abs(*fp));
                    *fp += h;
                    *fm -= h;
                    const double fd = (training_loss(plus, data) - training_loss(minus, data)) / (2 * h);
                    const double an = p == 0 ? g[i][l].a : (p == 1 ? g[i][l].b : g[i][l].e);
                    CHECK(an == doctest::Approx(fd).epsilon(1e-4).scale(1e-5));
                }
            }
        }
    }
}

TEST_CASE("LSE matches a dense normal-equation solve and is optimal") {
    Rng rng(31);
    for (int t = 0; t < 5; ++t) {
        const auto m = random_model(rng);
        const auto data = labeled_cloud(rng, 120);
        const auto c = solve_consequents(m, data, 1e-8);
        const auto a = oracle::normalized_strengths(m, data);
        std::vector<double> tgt;
        for (const auto& s : data) tgt.push_back(s.target);
        const auto ref = oracle::least_squares(a, tgt, 1e-8);
        std::array<double, 27> cc{};
        std::copy(c.begin(), c.end(), cc.begin());
        const double best = oracle::sse(a, tgt, cc);
        CHECK(best == doctest::Approx(oracle::sse(a, tgt, ref)).epsilon(1e-6));
        for (int k = 0; k < 100; ++k) {
            auto q = cc;
            for (auto& v : q) v += rng.normal(0.0, 1e-2);
            CHECK(oracle::sse(a, tgt, q) >= best);
        }
    }
}

TEST_CASE("bounded LSE") {
    Rng rng(41);
    const auto m = random_model(rng);
    const auto data = labeled_cloud(rng, 150);
    const auto free_c = solve_consequents(m, data, 1e-8);
    // a box containing the free solution changes nothing
    const auto [lo, hi] = std::minmax_element(free_c.begin(), free_c.end());
    const auto same = solve_consequents(m, data, 1e-8, *lo - 1.0, *hi + 1.0);
    for (std::size_t j = 0; j < 27; ++j) CHECK(same[j] == doctest::Approx(free_c[j]).epsilon(1e-9));

    // a tight box: feasible, and no feasible perturbation does better
    const double blo = -0.2;
    const double bhi = 0.6;
    const auto c = solve_consequents(m, data, 1e-8, blo, bhi);
    const auto a = oracle::normalized_strengths(m, data);
    std::vector<double> tgt;
    for (const auto& s : data) tgt.push_back(s.target);
    std::array<double, 27> cc{};
    std::copy(c.begin(), c.end(), cc.begin());
    int at_bound = 0;
    for (double v : cc) {
        CHECK(v >= blo);
        CHECK(v <= bhi);
        at_bound += (v == blo || v == bhi) ? 1 : 0;
    }
    CHECK(at_bound > 0);
    const double best = oracle::sse(a, tgt, cc);
    for (int k = 0; k < 300; ++k) {
        auto q = cc;
        for (auto& v : q) v = std::clamp(v + rng.normal(0.0, 0.02), blo, bhi);
        CHECK(oracle::sse(a, tgt, q) >= best - 1e-9);
    }
    CHECK_THROWS_AS(solve_consequents(m, data, 1e-8, 1.0, 1.0), ValidationError);
}

TEST_CASE("hybrid training lowers the RMSE and is deterministic") {
    Rng rng(51);
    const auto data = labeled_cloud(rng, 200);
    TrainConfig cfg;
    cfg.epochs = 30;
    const auto r = train_hybrid(data, cfg);
    REQUIRE(r.rmse_per_epoch.size() == 30);
    CHECK(r.rmse_per_epoch.back() <= r.rmse_per_epoch.front());
    for (std::size_t i = 1; i < r.rmse_per_epoch.size(); ++i) {
        CHECK(r.rmse_per_epoch[i] <= r.rmse_per_epoch[i - 1] + 1e-12);
    }
    for (double c : r.model.consequents) {
        CHECK(c >= cfg.consequent_min);
        CHECK(c <= cfg.consequent_max);
    }
    const auto again = train_hybrid(data, cfg);
    CHECK(again.model == r.model);

    CHECK_THROWS_AS(train_hybrid(std::vector<TrainSample>(data.begin(), data.begin() + 20), cfg), ValidationError);
    cfg.epochs = 0;
    CHECK_THROWS_AS(train_hybrid(data, cfg), ValidationError);
}

TEST_CASE("argmax ties go to the lowest style") {
    CHECK(argmax_style({0.2, 0.9, 0.9}) == 1);
    CHECK(argmax_style({0.5, 0.5, 0.5}) == 0);
    CHECK(argmax_style({-1.0, -2.0, -0.5}) == 2);
}

TEST_CASE("confusion bookkeeping on the published matrix") {
    ConfusionMatrix cm;
    const std::size_t rows[3][3] = {{6, 0, 0}, {0, 27, 0}, {1, 1, 9}};
    for (std::size_t i = 0; i < 3; ++i) {
        for (std::size_t j = 0; j < 3; ++j) cm.at(i, j) = rows[i][j];
    }
    CHECK(cm.total() == 44);
    CHECK(cm.correct() == 42);
    CHECK(cm.accuracy() == 42.0 / 44.0);
    const auto col = cm.per_class_by_column();
    CHECK(col[0] == 6.0 / 7.0);
    CHECK(col[1] == 27.0 / 28.0);
    CHECK(col[2] == 1.0);
    const auto row = cm.per_class_by_row();
    CHECK(row[0] == 1.0);
    CHECK(row[2] == 9.0 / 11.0);
}

TEST_CASE("stratified split keeps class proportions") {
    std::vector<int> labels;
    for (int i = 0; i < 40; ++i) labels.push_back(0);
    for (int i = 0; i < 20; ++i) labels.push_back(1);
    for (int i = 0; i < 8; ++i) labels.push_back(2);
    const auto s = stratified_split(labels, 0.75, 3);
    std::array<int, 3> train{};
    for (auto i : s.train) ++train[static_cast<std::size_t>(labels[i])];
    CHECK(train == std::array<int, 3>{30, 15, 6});
    CHECK(s.train.size() + s.test.size() == labels.size());
    std::vector<std::size_t> all = s.train;
    all.insert(all.end(), s.test.begin(), s.test.end());
    std::sort(all.begin(), all.end());
    for (std::size_t i = 0; i < all.size(); ++i) CHECK(all[i] == i);
    const auto again = stratified_split(labels, 0.75, 3);
    CHECK(again.train == s.train);
    CHECK_THROWS_AS(stratified_split(labels, 1.0, 3), ValidationError);
}

TEST_CASE("bank separates one-vs-rest targets") {
    Rng rng(61);
    std::vector<LabeledVector> data;
    const std::array<Vec3, 3> centers{Vec3{0.2, 0.9, 0.7}, Vec3{0.85, 0.05, 0.0}, Vec3{0.45, 0.35, 0.1}};
    for (int i = 0; i < 60; ++i) {
        for (int c = 0; c < 3; ++c) {
            const auto& m = centers[static_cast<std::size_t>(c)];
            data.push_back({{std::clamp(m[0] + rng.normal(0, 0.05), 0.0, 1.0), std::clamp(m[1] + rng.normal(0, 0.05), 0.0, 1.0),
                             std::clamp(m[2] + rng.normal(0, 0.05), 0.0, 1.0)},
                            c});
        }
    }
    TrainConfig cfg;
    cfg.epochs = 20;
    const auto bank = train_bank(data, Scaler{{0, 0, 0}, {1, 1, 1}}, cfg);
    const auto cm = evaluate(bank, data);
    CHECK(cm.accuracy() >= 0.95);
    CHECK_THROWS_AS(evaluate(bank, std::vector<LabeledVector>{}), ValidationError);
}
