#pragma once

// (mu/mu_w, lambda)-CMA-ES with cumulative step-size adaptation, rank-one and
// rank-mu covariance updates, and lazy eigendecomposition. Minimises.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "common.hpp"

namespace morphevo {

class CmaEs {
public:
    CmaEs(Eigen::VectorXd mean, double sigma, int lambda) { reset(std::move(mean), sigma, lambda); }

    /// Restarts the strategy from a new mean with identity covariance.
    void reset(Eigen::VectorXd mean, double sigma, int lambda) {
        if (mean.size() < 1) throw InterfaceError("CMA-ES dimension must be >= 1");
        if (lambda < 2) throw InterfaceError("CMA-ES population must be >= 2");
        const int n = static_cast<int>(mean.size());
        mean_ = std::move(mean);
        sigma_ = sigma;
        lambda_ = lambda;
        generation_ = 0;
        evals_since_eigen_ = 0;

        mu_ = lambda_ / 2;
        weights_.resize(mu_);
        for (int i = 0; i < mu_; ++i) weights_[i] = std::log(mu_ + 0.5) - std::log(i + 1.0);
        weights_ /= weights_.sum();
        mueff_ = 1.0 / weights_.squaredNorm();

        const double dn = n;
        cc_ = (4.0 + mueff_ / dn) / (dn + 4.0 + 2.0 * mueff_ / dn);
        cs_ = (mueff_ + 2.0) / (dn + mueff_ + 5.0);
        c1_ = 2.0 / ((dn + 1.3) * (dn + 1.3) + mueff_);
        cmu_ = std::min(1.0 - c1_, 2.0 * (mueff_ - 2.0 + 1.0 / mueff_) / ((dn + 2.0) * (dn + 2.0) + mueff_));
        damps_ = 1.0 + 2.0 * std::max(0.0, std::sqrt((mueff_ - 1.0) / (dn + 1.0)) - 1.0) + cs_;
        chi_n_ = std::sqrt(dn) * (1.0 - 1.0 / (4.0 * dn) + 1.0 / (21.0 * dn * dn));

        pc_ = Eigen::VectorXd::Zero(n);
        ps_ = Eigen::VectorXd::Zero(n);
        cov_ = Eigen::MatrixXd::Identity(n, n);
        basis_ = Eigen::MatrixXd::Identity(n, n);
        scales_ = Eigen::VectorXd::Ones(n);
        samples_.clear();
    }

    std::vector<Eigen::VectorXd> ask(Rng &rng) {
        const auto n = mean_.size();
        std::normal_distribution<double> gauss(0.0, 1.0);
        samples_.assign(static_cast<std::size_t>(lambda_), Eigen::VectorXd(n));
        std::vector<Eigen::VectorXd> xs;
        xs.reserve(samples_.size());
        for (auto &y : samples_) {
            Eigen::VectorXd z(n);
            for (Eigen::Index i = 0; i < n; ++i) z[i] = gauss(rng);
            y = basis_ * scales_.cwiseProduct(z);
            xs.push_back(mean_ + sigma_ * y);
        }
        return xs;
    }

    /// `fitness[i]` belongs to the i-th candidate of the last ask (lower is better).
    void tell(std::span<const double> fitness) {
        if (fitness.size() != samples_.size()) throw InterfaceError("CMA-ES tell: fitness count != lambda");
        const auto n = mean_.size();
        std::vector<int> order(samples_.size());
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return fitness[a] < fitness[b]; });

        Eigen::VectorXd y_w = Eigen::VectorXd::Zero(n);
        for (int i = 0; i < mu_; ++i) y_w += weights_[i] * samples_[order[i]];
        mean_ += sigma_ * y_w;

        // C^{-1/2} y_w = B D^{-1} B^T y_w
        const Eigen::VectorXd inv_sqrt_y = basis_ * (basis_.transpose() * y_w).cwiseQuotient(scales_);
        ps_ = (1.0 - cs_) * ps_ + std::sqrt(cs_ * (2.0 - cs_) * mueff_) * inv_sqrt_y;
        ++generation_;
        const double ps_norm = ps_.norm();
        const bool hsig = ps_norm / std::sqrt(1.0 - std::pow(1.0 - cs_, 2.0 * generation_)) / chi_n_ <
                          1.4 + 2.0 / (static_cast<double>(n) + 1.0);
        pc_ = (1.0 - cc_) * pc_ + (hsig ? std::sqrt(cc_ * (2.0 - cc_) * mueff_) : 0.0) * y_w;

        Eigen::MatrixXd rank_mu = Eigen::MatrixXd::Zero(n, n);
        for (int i = 0; i < mu_; ++i) {
            const auto &y = samples_[order[i]];
            rank_mu.noalias() += weights_[i] * y * y.transpose();
        }
        const double old_weight = 1.0 - c1_ - cmu_ + (hsig ? 0.0 : c1_ * cc_ * (2.0 - cc_));
        cov_ = old_weight * cov_ + c1_ * pc_ * pc_.transpose() + cmu_ * rank_mu;
        sigma_ *= std::exp((cs_ / damps_) * (ps_norm / chi_n_ - 1.0));

        evals_since_eigen_ += lambda_;
        if (evals_since_eigen_ > lambda_ / (c1_ + cmu_) / static_cast<double>(n) / 10.0) update_eigen();
    }

    const Eigen::VectorXd &mean() const { return mean_; }
    double sigma() const { return sigma_; }
    int lambda() const { return lambda_; }
    int generation() const { return generation_; }
    const Eigen::MatrixXd &covariance() const { return cov_; }
    Eigen::Index dim() const { return mean_.size(); }

private:
    void update_eigen() {
        evals_since_eigen_ = 0;
        cov_ = (0.5 * (cov_ + cov_.transpose())).eval();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov_);
        Eigen::VectorXd values = eig.eigenvalues();
        basis_ = eig.eigenvectors();
        // keep C positive-definite
        if (values.minCoeff() < 1e-12) {
            values = values.cwiseMax(1e-12);
            cov_ = basis_ * values.asDiagonal() * basis_.transpose();
        }
        scales_ = values.cwiseSqrt();
    }

    Eigen::VectorXd mean_;
    double sigma_ = 1.0;
    int lambda_ = 0;
    int mu_ = 0;
    int generation_ = 0;
    double evals_since_eigen_ = 0.0;
    Eigen::VectorXd weights_;
    double mueff_ = 0, cc_ = 0, cs_ = 0, c1_ = 0, cmu_ = 0, damps_ = 0, chi_n_ = 0;
    Eigen::VectorXd pc_, ps_;
    Eigen::MatrixXd cov_, basis_;
    Eigen::VectorXd scales_;
    std::vector<Eigen::VectorXd> samples_;
};

} // namespace morphevo
