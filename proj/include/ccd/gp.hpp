#pragma once

#include <functional>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

namespace ccd {

/// Squared-exponential kernel hyperparameters.
struct KernelParams {
    double variance = 1.0;
    std::vector<double> lengthscales{1.0};
    double noise = 1e-6;

    void validate() const;
    friend bool operator==(const KernelParams&, const KernelParams&) = default;
};

/// variance * exp(-0.5 * sum_j ((x_j - y_j) / l_j)^2)
double kernel_eval(const KernelParams& params, const Eigen::VectorXd& x, const Eigen::VectorXd& y);

/// Gram matrix of the kernel over the rows of `inputs` (no noise, no jitter).
Eigen::MatrixXd gram(const KernelParams& params, const Eigen::MatrixXd& inputs);

using PriorMean = std::function<double(const Eigen::VectorXd&)>;

inline double zero_mean(const Eigen::VectorXd&) { return 0.0; }

/// Candidate values for the marginal-likelihood grid search. Every input
/// dimension draws its lengthscale from the same list.
struct HyperGrid {
    std::vector<double> lengthscales;
    std::vector<double> variances;
    std::vector<double> noises;

    static HyperGrid defaults();
    /// Every (lengthscales..., variance, noise) combination for `dims` inputs.
    std::vector<KernelParams> enumerate(std::size_t dims) const;
};

struct Posterior {
    double mean = 0.0;
    double variance = 0.0;  // latent function variance, >= 0
};

/// Relative diagonal jitter: starts at 1e-8 * variance, escalates x10 up to 1e-2.
inline constexpr double kJitterStart = 1e-8;
inline constexpr double kJitterMax = 1e-2;

class GpModel {
public:
    /// Selects hyperparameters maximising the log marginal likelihood over
    /// `grid`, then factorises. Throws FitError if no grid point factorises.
    static GpModel fit(Eigen::MatrixXd inputs, Eigen::VectorXd targets, PriorMean prior_mean,
                       const HyperGrid& grid = HyperGrid::defaults());

    /// Fixed hyperparameters. Throws FitError after maximal jitter escalation.
    static GpModel with_params(Eigen::MatrixXd inputs, Eigen::VectorXd targets, PriorMean prior_mean,
                               KernelParams params);

    Posterior posterior(const Eigen::VectorXd& query) const;
    double posterior_mean(const Eigen::VectorXd& query) const;

    /// -0.5 r'(K + s I)^-1 r - 0.5 log|K + s I| - n/2 log(2 pi), r = y - prior mean.
    double log_marginal_likelihood() const;

    const Eigen::MatrixXd& inputs() const noexcept { return inputs_; }
    const Eigen::VectorXd& targets() const noexcept { return targets_; }
    const KernelParams& params() const noexcept { return params_; }
    const PriorMean& prior_mean() const noexcept { return prior_; }
    std::size_t size() const noexcept { return static_cast<std::size_t>(targets_.size()); }
    std::size_t dims() const noexcept { return static_cast<std::size_t>(inputs_.cols()); }
    /// Diagonal term actually added: noise + jitter.
    double diagonal() const noexcept { return diagonal_; }
    /// K + diagonal() * I, as factorised.
    Eigen::MatrixXd regularised_gram() const;
    const Eigen::LLT<Eigen::MatrixXd>& factor() const noexcept { return llt_; }

private:
    GpModel() = default;

    Eigen::MatrixXd inputs_;
    Eigen::VectorXd targets_;
    Eigen::VectorXd residuals_;
    PriorMean prior_;
    KernelParams params_;
    double diagonal_ = 0.0;
    Eigen::LLT<Eigen::MatrixXd> llt_;
    Eigen::VectorXd alpha_;
};

}  // namespace ccd
