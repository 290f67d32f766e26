#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "dstyle/anfis.hpp"
#include "dstyle/errors.hpp"
#include "dstyle/simd/kernels.hpp"

namespace dstyle {

namespace {

constexpr double kMinWidth = 1e-3;
constexpr int kMaxStepHalvings = 8;

// Batched forward pass: memberships, firing strengths and the N/D sums.
struct Forward {
    std::vector<double> mu;   // n x 9
    std::vector<double> w;    // n x 27
    std::vector<double> num;
    std::vector<double> den;
};

Forward forward(const AnfisModel& model, std::span<const TrainSample> data) {
    const std::size_t n = data.size();
    Forward f;
    f.mu.resize(9 * n);
    f.w.resize(27 * n);
    f.num.resize(n);
    f.den.resize(n);
    for (std::size_t s = 0; s < n; ++s) {
        const auto m = memberships(model, data[s].x);
        std::copy(m.begin(), m.end(), f.mu.begin() + static_cast<std::ptrdiff_t>(9 * s));
    }
    simd::active_kernels().rule_forward(f.mu.data(), n, model.consequents.data(), f.w.data(), f.num.data(),
                                        f.den.data());
    for (std::size_t s = 0; s < n; ++s) {
        if (!(f.den[s] > kMinFiringSum)) throw NumericError("ANFIS: no rule fired for training sample " + std::to_string(s));
    }
    return f;
}

// d mu / d(a, b, e) of a bell membership at x.
BellMF bell_partials(const BellMF& mf, double x) {
    const double diff = x - mf.e;
    const double z = std::abs(diff / mf.a);
    if (z == 0.0) return {0.0, 0.0, 0.0};
    const double u = std::pow(z, 2.0 * mf.b);
    const double mu = 1.0 / (1.0 + u);
    const double mu2 = mu * mu;
    BellMF g;
    g.a = mu2 * 2.0 * mf.b * u / mf.a;
    g.b = -mu2 * 2.0 * u * std::log(z);
    g.e = mu2 * 2.0 * mf.b * u / diff;
    return g;
}

AnfisModel step(const AnfisModel& model, const MfGrid& grad, double rate) {
    AnfisModel next = model;
    for (std::size_t i = 0; i < kAnfisInputs; ++i) {
        for (std::size_t l = 0; l < kAnfisLabels; ++l) {
            auto& mf = next.mfs[i][l];
            const auto& g = grad[i][l];
            mf.a = std::max(kMinWidth, mf.a - rate * g.a);
            // log-space update keeps b > 0: d/d(log b) = b * d/db
            mf.b = std::exp(std::log(mf.b) - rate * g.b * mf.b);
            mf.e -= rate * g.e;
        }
    }
    return next;
}

double grad_norm(const AnfisModel& model, const MfGrid& grad) {
    double sq = 0.0;
    for (std::size_t i = 0; i < kAnfisInputs; ++i) {
        for (std::size_t l = 0; l < kAnfisLabels; ++l) {
            const auto& g = grad[i][l];
            const double gb = g.b * model.mfs[i][l].b;
            sq += g.a * g.a + gb * gb + g.e * g.e;
        }
    }
    return std::sqrt(sq);
}

// Normalized firing strengths (n x 27) and targets of the forward-pass LSE.
struct LseSystem {
    Eigen::MatrixXd a;
    Eigen::VectorXd t;
};

LseSystem lse_system(const AnfisModel& model, std::span<const TrainSample> data) {
    const auto f = forward(model, data);
    const auto n = static_cast<Eigen::Index>(data.size());
    LseSystem sys{Eigen::MatrixXd(n, kAnfisRules), Eigen::VectorXd(n)};
    for (Eigen::Index s = 0; s < n; ++s) {
        const auto su = static_cast<std::size_t>(s);
        for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(kAnfisRules); ++j) {
            sys.a(s, j) = f.w[27 * su + static_cast<std::size_t>(j)] / f.den[su];
        }
        sys.t(s) = data[su].target;
    }
    return sys;
}

// Ridge least squares over the free columns, the others held at x.
Eigen::VectorXd solve_free(const LseSystem& sys, double ridge, const std::vector<bool>& free, const Eigen::VectorXd& x) {
    const Eigen::Index n = sys.a.rows();
    std::vector<Eigen::Index> cols;
    Eigen::VectorXd rhs = sys.t;
    for (Eigen::Index j = 0; j < sys.a.cols(); ++j) {
        if (free[static_cast<std::size_t>(j)]) {
            cols.push_back(j);
        } else {
            rhs -= sys.a.col(j) * x(j);
        }
    }
    Eigen::VectorXd out = x;
    if (cols.empty()) return out;
    const auto m = static_cast<Eigen::Index>(cols.size());
    // Ridge as augmented rows: [W; sqrt(ridge) I] c = [t; 0].
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n + m, m);
    Eigen::VectorXd t = Eigen::VectorXd::Zero(n + m);
    const double r = std::sqrt(ridge);
    for (Eigen::Index k = 0; k < m; ++k) {
        a.block(0, k, n, 1) = sys.a.col(cols[static_cast<std::size_t>(k)]);
        a(n + k, k) = r;
    }
    t.head(n) = rhs;
    const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
    if (qr.rank() < m) throw NumericError("LSE: rank-deficient system despite ridge");
    const Eigen::VectorXd c = qr.solve(t);
    for (Eigen::Index k = 0; k < m; ++k) out(cols[static_cast<std::size_t>(k)]) = c(k);
    return out;
}

RuleVector to_rules(const Eigen::VectorXd& c) {
    RuleVector out{};
    for (std::size_t j = 0; j < kAnfisRules; ++j) {
        const double v = c(static_cast<Eigen::Index>(j));
        if (!std::isfinite(v)) throw NumericError("LSE: non-finite consequent");
        out[j] = v;
    }
    return out;
}

}  // namespace

void validate(const TrainConfig& cfg) {
    if (cfg.epochs < 1) throw ValidationError("train: epochs must be >= 1");
    if (!(cfg.learning_rate > 0.0)) throw ValidationError("train: learning rate must be positive");
    if (!(cfg.train_fraction > 0.0 && cfg.train_fraction < 1.0)) {
        throw ValidationError("train: train fraction must lie in (0, 1)");
    }
    if (!(cfg.lse_ridge >= 0.0)) throw ValidationError("train: ridge must be non-negative");
    if (!(cfg.consequent_min < cfg.consequent_max)) throw ValidationError("train: empty consequent box");
}

double training_loss(const AnfisModel& model, std::span<const TrainSample> data) {
    const auto f = forward(model, data);
    double sse = 0.0;
    for (std::size_t s = 0; s < data.size(); ++s) {
        const double r = f.num[s] / f.den[s] - data[s].target;
        sse += r * r;
    }
    return sse / (2.0 * static_cast<double>(data.size()));
}

double training_rmse(const AnfisModel& model, std::span<const TrainSample> data) {
    return std::sqrt(2.0 * training_loss(model, data));
}

MfGrid antecedent_gradient(const AnfisModel& model, std::span<const TrainSample> data) {
    const auto f = forward(model, data);
    const double inv_n = 1.0 / static_cast<double>(data.size());
    MfGrid grad{};
    for (auto& row : grad) row.fill({0.0, 0.0, 0.0});

    for (std::size_t s = 0; s < data.size(); ++s) {
        const double* mu = &f.mu[9 * s];
        const double y = f.num[s] / f.den[s];
        const double dl_dy = (y - data[s].target) * inv_n;

        // d y / d mu[input][label], summed over the rules using that label.
        std::array<double, 9> dy_dmu{};
        for (std::size_t j = 0; j < kAnfisRules; ++j) {
            const auto lab = rule_labels(j);
            const double dy_dw = (model.consequents[j] - y) / f.den[s];
            const double m0 = mu[lab[0]];
            const double m1 = mu[3 + lab[1]];
            const double m2 = mu[6 + lab[2]];
            dy_dmu[lab[0]] += dy_dw * m1 * m2;
            dy_dmu[3 + lab[1]] += dy_dw * m0 * m2;
            dy_dmu[6 + lab[2]] += dy_dw * m0 * m1;
        }
        for (std::size_t i = 0; i < kAnfisInputs; ++i) {
            for (std::size_t l = 0; l < kAnfisLabels; ++l) {
                const auto p = bell_partials(model.mfs[i][l], data[s].x[i]);
                const double k = dl_dy * dy_dmu[3 * i + l];
                grad[i][l].a += k * p.a;
                grad[i][l].b += k * p.b;
                grad[i][l].e += k * p.e;
            }
        }
    }
    return grad;
}

RuleVector solve_consequents(const AnfisModel& model, std::span<const TrainSample> data, double ridge) {
    const auto sys = lse_system(model, data);
    std::vector<bool> free(kAnfisRules, true);
    return to_rules(solve_free(sys, ridge, free, Eigen::VectorXd::Zero(kAnfisRules)));
}

RuleVector solve_consequents(const AnfisModel& model, std::span<const TrainSample> data, double ridge, double lo,
                             double hi) {
    if (!(lo < hi)) throw ValidationError("LSE: empty consequent box");
    const auto sys = lse_system(model, data);
    const Eigen::Index m = kAnfisRules;

    // Active-set bounded-variable least squares. state: 0 free, -1 at lo, +1 at hi.
    std::vector<int> state(kAnfisRules, 0);
    Eigen::VectorXd x = Eigen::VectorXd::Constant(m, std::clamp(0.0, lo, hi));
    const double tol = 1e-12 * (1.0 + std::max(std::abs(lo), std::abs(hi)));

    for (int outer = 0; outer < 4 * static_cast<int>(kAnfisRules) + 8; ++outer) {
        for (int inner = 0; inner <= static_cast<int>(kAnfisRules); ++inner) {
            std::vector<bool> free(kAnfisRules);
            for (std::size_t j = 0; j < kAnfisRules; ++j) free[j] = state[j] == 0;
            const auto z = solve_free(sys, ridge, free, x);
            double alpha = 1.0;
            for (Eigen::Index j = 0; j < m; ++j) {
                if (!free[static_cast<std::size_t>(j)]) continue;
                if (z(j) > hi) alpha = std::min(alpha, (hi - x(j)) / (z(j) - x(j)));
                if (z(j) < lo) alpha = std::min(alpha, (lo - x(j)) / (z(j) - x(j)));
            }
            for (Eigen::Index j = 0; j < m; ++j) {
                if (free[static_cast<std::size_t>(j)]) x(j) += alpha * (z(j) - x(j));
            }
            if (alpha >= 1.0) break;
            for (Eigen::Index j = 0; j < m; ++j) {
                const auto ju = static_cast<std::size_t>(j);
                if (!free[ju]) continue;
                if (x(j) >= hi - tol) {
                    x(j) = hi;
                    state[ju] = 1;
                } else if (x(j) <= lo + tol) {
                    x(j) = lo;
                    state[ju] = -1;
                }
            }
        }

        // Release the bound variable whose gradient most wants to leave its bound.
        const Eigen::VectorXd g = sys.a.transpose() * (sys.t - sys.a * x) - ridge * x;
        std::size_t best = kAnfisRules;
        double best_g = 1e-12 * (1.0 + sys.t.norm());
        for (std::size_t j = 0; j < kAnfisRules; ++j) {
            const double gj = g(static_cast<Eigen::Index>(j));
            const double pull = state[j] == -1 ? gj : (state[j] == 1 ? -gj : 0.0);
            if (pull > best_g) {
                best_g = pull;
                best = j;
            }
        }
        if (best == kAnfisRules) return to_rules(x);
        state[best] = 0;
    }
    return to_rules(x);
}

TrainResult train_hybrid(std::span<const TrainSample> data, const TrainConfig& cfg, const AnfisModel& init) {
    validate(cfg);
    if (data.size() < kAnfisRules) {
        throw ValidationError("train: need at least 27 samples, got " + std::to_string(data.size()));
    }
    TrainResult result;
    result.model = init;
    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        try {
            result.model.consequents =
                solve_consequents(result.model, data, cfg.lse_ridge, cfg.consequent_min, cfg.consequent_max);
        } catch (const NumericError& e) {
            throw NumericError("epoch " + std::to_string(epoch) + ": " + e.what());
        }
        const double loss = training_loss(result.model, data);
        result.rmse_per_epoch.push_back(std::sqrt(2.0 * loss));
        if (epoch == cfg.epochs) break;

        // Backward pass: normalized gradient step of length learning_rate.
        const auto grad = antecedent_gradient(result.model, data);
        const double norm = grad_norm(result.model, grad);
        if (!(norm > 0.0) || !std::isfinite(norm)) continue;
        double rate = cfg.learning_rate / norm;
        for (int attempt = 0; attempt < kMaxStepHalvings; ++attempt, rate *= 0.5) {
            auto candidate = step(result.model, grad, rate);
            double cand_loss;
            try {
                cand_loss = training_loss(candidate, data);
            } catch (const NumericError&) {
                continue;
            }
            if (cand_loss <= loss) {
                result.model = candidate;
                break;
            }
        }
    }
    return result;
}

}  // namespace dstyle
