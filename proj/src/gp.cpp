#include "ccd/gp.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/Eigenvalues>
#include <fmt/format.h>

#include "ccd/errors.hpp"

namespace ccd {

void KernelParams::validate() const {
    if (!(variance > 0.0)) throw ValidationError("variance", "must be positive");
    if (lengthscales.empty()) throw ValidationError("lengthscales", "need one per input dimension");
    for (auto l : lengthscales)
        if (!(l > 0.0)) throw ValidationError("lengthscales", "must be positive");
    if (!(noise >= 0.0)) throw ValidationError("noise", "must be non-negative");
}

double kernel_eval(const KernelParams& params, const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
    const auto d = static_cast<Eigen::Index>(params.lengthscales.size());
    if (x.size() != d || y.size() != d)
        throw std::invalid_argument(fmt::format("kernel_eval: expected {}-d points", d));
    double r2 = 0.0;
    for (Eigen::Index j = 0; j < d; ++j) {
        const double z = (x[j] - y[j]) / params.lengthscales[static_cast<std::size_t>(j)];
        r2 += z * z;
    }
    return params.variance * std::exp(-0.5 * r2);
}

Eigen::MatrixXd gram(const KernelParams& params, const Eigen::MatrixXd& inputs) {
    const auto n = inputs.rows();
    Eigen::MatrixXd k(n, n);
    for (Eigen::Index a = 0; a < n; ++a) {
        k(a, a) = params.variance;
        for (Eigen::Index b = a + 1; b < n; ++b)
            k(a, b) = k(b, a) = kernel_eval(params, inputs.row(a).transpose(), inputs.row(b).transpose());
    }
    return k;
}

HyperGrid HyperGrid::defaults() {
    return {
        {0.05, 0.1, 0.2, 0.3, 0.5, 0.75, 1.0},
        {0.1, 0.3, 1.0, 3.0, 10.0, 30.0, 100.0},
        {1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1, 1.0},
    };
}

namespace {

// All lengthscale tuples for `dims` inputs, first dimension varying slowest.
std::vector<std::vector<double>> lengthscale_tuples(const std::vector<double>& values, std::size_t dims) {
    std::vector<std::vector<double>> out{{}};
    for (std::size_t d = 0; d < dims; ++d) {
        std::vector<std::vector<double>> next;
        for (const auto& prefix : out)
            for (auto v : values) {
                next.push_back(prefix);
                next.back().push_back(v);
            }
        out = std::move(next);
    }
    return out;
}

Eigen::VectorXd residuals_of(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets, const PriorMean& prior) {
    Eigen::VectorXd r(targets.size());
    for (Eigen::Index i = 0; i < targets.size(); ++i) r[i] = targets[i] - prior(inputs.row(i).transpose());
    return r;
}

}  // namespace

std::vector<KernelParams> HyperGrid::enumerate(std::size_t dims) const {
    std::vector<KernelParams> out;
    for (const auto& ls : lengthscale_tuples(lengthscales, dims))
        for (auto v : variances)
            for (auto s : noises) out.push_back({v, ls, s});
    return out;
}

GpModel GpModel::with_params(Eigen::MatrixXd inputs, Eigen::VectorXd targets, PriorMean prior_mean,
                             KernelParams params) {
    params.validate();
    if (inputs.rows() < 1) throw ValidationError("inputs", "need at least one training point");
    if (inputs.rows() != targets.size()) throw ValidationError("targets", "length must match input rows");
    if (static_cast<std::size_t>(inputs.cols()) != params.lengthscales.size())
        throw ValidationError("lengthscales", "need one per input dimension");
    if (!inputs.allFinite() || !targets.allFinite()) throw FitError("training data contains non-finite values");

    GpModel m;
    m.prior_ = prior_mean ? std::move(prior_mean) : PriorMean(zero_mean);
    m.residuals_ = residuals_of(inputs, targets, m.prior_);
    m.inputs_ = std::move(inputs);
    m.targets_ = std::move(targets);
    m.params_ = std::move(params);

    const Eigen::MatrixXd k = gram(m.params_, m.inputs_);
    for (double rel = kJitterStart; rel <= kJitterMax * 1.0000001; rel *= 10.0) {
        m.diagonal_ = m.params_.noise + rel * m.params_.variance;
        Eigen::MatrixXd kk = k;
        kk.diagonal().array() += m.diagonal_;
        m.llt_.compute(kk);
        if (m.llt_.info() == Eigen::Success) {
            m.alpha_ = m.llt_.solve(m.residuals_);
            return m;
        }
    }
    throw FitError("gram matrix is not positive definite after maximal jitter");
}

GpModel GpModel::fit(Eigen::MatrixXd inputs, Eigen::VectorXd targets, PriorMean prior_mean, const HyperGrid& grid) {
    if (inputs.rows() < 1) throw ValidationError("inputs", "need at least one training point");
    if (inputs.rows() != targets.size()) throw ValidationError("targets", "length must match input rows");
    if (grid.lengthscales.empty() || grid.variances.empty() || grid.noises.empty())
        throw ValidationError("hyper_grid", "every axis needs at least one value");
    if (!prior_mean) prior_mean = zero_mean;

    const auto n = inputs.rows();
    const auto dims = static_cast<std::size_t>(inputs.cols());
    const Eigen::VectorXd r = residuals_of(inputs, targets, prior_mean);
    const double log2pi = std::log(2.0 * std::numbers::pi);

    // K = v K1 + s I with K1 the unit-variance Gram, so one eigendecomposition
    // of K1 per lengthscale tuple prices every (variance, noise) pair in O(n).
    double best = -std::numeric_limits<double>::infinity();
    KernelParams chosen;
    bool found = false;
    for (auto& ls : lengthscale_tuples(grid.lengthscales, dims)) {
        KernelParams unit{1.0, ls, 0.0};
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram(unit, inputs));
        if (eig.info() != Eigen::Success) continue;
        const Eigen::VectorXd lambda = eig.eigenvalues();
        const Eigen::VectorXd proj = eig.eigenvectors().transpose() * r;
        const Eigen::ArrayXd proj2 = proj.array().square();
        for (auto v : grid.variances)
            for (auto s : grid.noises) {
                const Eigen::ArrayXd d = v * lambda.array() + (s + kJitterStart * v);
                if ((d <= 0.0).any()) continue;
                const double lml = -0.5 * (proj2 / d).sum() - 0.5 * d.log().sum() - 0.5 * static_cast<double>(n) * log2pi;
                if (std::isfinite(lml) && lml > best) {
                    best = lml;
                    chosen = {v, ls, s};
                    found = true;
                }
            }
    }
    if (!found) throw FitError("no hyperparameter combination yields a positive definite gram matrix");
    return with_params(std::move(inputs), std::move(targets), std::move(prior_mean), std::move(chosen));
}

Posterior GpModel::posterior(const Eigen::VectorXd& query) const {
    const auto n = inputs_.rows();
    Eigen::VectorXd k(n);
    for (Eigen::Index i = 0; i < n; ++i) k[i] = kernel_eval(params_, inputs_.row(i).transpose(), query);
    Posterior p;
    p.mean = prior_(query) + k.dot(alpha_);
    const Eigen::VectorXd v = llt_.matrixL().solve(k);
    p.variance = std::max(0.0, params_.variance - v.squaredNorm());
    return p;
}

double GpModel::posterior_mean(const Eigen::VectorXd& query) const {
    const auto n = inputs_.rows();
    double m = prior_(query);
    for (Eigen::Index i = 0; i < n; ++i) m += alpha_[i] * kernel_eval(params_, inputs_.row(i).transpose(), query);
    return m;
}

double GpModel::log_marginal_likelihood() const {
    const auto n = static_cast<double>(residuals_.size());
    const Eigen::MatrixXd& l = llt_.matrixLLT();
    const double logdet = 2.0 * l.diagonal().array().log().sum();
    return -0.5 * residuals_.dot(alpha_) - 0.5 * logdet - 0.5 * n * std::log(2.0 * std::numbers::pi);
}

Eigen::MatrixXd GpModel::regularised_gram() const {
    Eigen::MatrixXd k = gram(params_, inputs_);
    k.diagonal().array() += diagonal_;
    return k;
}

}  // namespace ccd
