#pragma once
// Single full-covariance Gaussian over per-clip mean log-mel vectors, scored
// by Mahalanobis distance through a stored Cholesky factorization.

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "anomarank/common.hpp"
#include "anomarank/mel.hpp"

namespace anomarank {

struct GaussianModel {
    std::vector<double> mean;        // dim
    std::vector<double> covariance;  // dim x dim, row-major, after regularization
    std::vector<double> chol;        // lower-triangular L with L * L^T = covariance
    double shrinkage = 0.1;
    double epsilon = 2.0;

    std::size_t dim() const { return mean.size(); }
};

namespace gaussian_detail {

// Hand-rolled lower Cholesky; throws when the matrix is not positive definite.
inline std::vector<double> cholesky(const std::vector<double>& a, std::size_t n) {
    std::vector<double> l(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double acc = a[i * n + j];
            for (std::size_t k = 0; k < j; ++k) acc -= l[i * n + k] * l[j * n + k];
            if (i == j) {
                if (acc <= 0.0) throw DataError("covariance is not positive definite");
                l[i * n + i] = std::sqrt(acc);
            } else {
                l[i * n + j] = acc / l[j * n + j];
            }
        }
    }
    return l;
}

}  // namespace gaussian_detail

// The default ridge suits pooled log-mel clip means, whose diagonal
// variances sit well above it; pass epsilon = 0 for scale-free fits.
inline GaussianModel fit_gaussian(const std::vector<FeatureMatrix>& features,
                                  double shrinkage = 0.1, double epsilon = 2.0) {
    if (shrinkage < 0.0 || shrinkage > 1.0) {
        throw ConfigError("gaussian shrinkage must be in [0, 1]");
    }
    if (features.size() < 2) throw DataError("fit_gaussian needs at least 2 clips");

    const std::size_t dim = features.front().n_mels;
    std::vector<std::vector<double>> vectors;
    vectors.reserve(features.size());
    for (const auto& f : features) {
        if (f.n_mels != dim) throw DataError("fit_gaussian: inconsistent feature widths");
        vectors.push_back(f.mean_vector());
    }

    GaussianModel model;
    model.shrinkage = shrinkage;
    model.epsilon = epsilon;
    model.mean.assign(dim, 0.0);
    for (const auto& v : vectors) {
        for (std::size_t d = 0; d < dim; ++d) model.mean[d] += v[d];
    }
    for (double& m : model.mean) m /= static_cast<double>(vectors.size());

    // Unbiased sample covariance, then diagonal shrinkage plus a ridge.
    std::vector<double> s(dim * dim, 0.0);
    for (const auto& v : vectors) {
        for (std::size_t i = 0; i < dim; ++i) {
            const double di = v[i] - model.mean[i];
            for (std::size_t j = 0; j <= i; ++j) s[i * dim + j] += di * (v[j] - model.mean[j]);
        }
    }
    const double denom = static_cast<double>(vectors.size() - 1);
    model.covariance.assign(dim * dim, 0.0);
    for (std::size_t i = 0; i < dim; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            const double sij = s[i * dim + j] / denom;
            double value = (1.0 - shrinkage) * sij;
            if (i == j) value += shrinkage * sij + epsilon;
            model.covariance[i * dim + j] = value;
            model.covariance[j * dim + i] = value;
        }
    }
    model.chol = gaussian_detail::cholesky(model.covariance, dim);
    return model;
}

inline double score_mahalanobis(const GaussianModel& model, const FeatureMatrix& features) {
    if (model.mean.empty()) throw DataError("score_mahalanobis: model is not fit");
    if (features.n_mels != model.dim()) {
        throw DataError("score_mahalanobis: feature width does not match the model");
    }
    const std::size_t n = model.dim();
    const std::vector<double> v = features.mean_vector();

    // Forward-substitute L z = (v - mean); the distance is ||z||.
    std::vector<double> z(n, 0.0);
    double acc2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double acc = v[i] - model.mean[i];
        for (std::size_t k = 0; k < i; ++k) acc -= model.chol[i * n + k] * z[k];
        z[i] = acc / model.chol[i * n + i];
        acc2 += z[i] * z[i];
    }
    return std::sqrt(acc2);
}

}  // namespace anomarank
