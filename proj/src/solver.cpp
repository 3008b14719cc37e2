#include "sbn/solver.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include <Eigen/SVD>

namespace sbn {

namespace {

constexpr double kGammaCap = 1e9;  // "noise-free" regime for the auto gamma

double top_singular_value(const Eigen::MatrixXd& m) {
    Eigen::BDCSVD<Eigen::MatrixXd> svd(m);
    return svd.singularValues()(0);
}

double nuclear_after_threshold(const Eigen::VectorXd& sv, double eps) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        s += std::max(sv(i) - eps, 0.0);
    return s;
}

Eigen::MatrixXd svt_impl(const Eigen::MatrixXd& m, double eps, double* nuclear_out) {
    if (eps < 0.0)
        throw std::invalid_argument("singular_value_threshold: eps must be nonnegative");
    if (!m.allFinite())
        throw std::invalid_argument("singular_value_threshold: non-finite input");
    Eigen::BDCSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    Eigen::VectorXd sv = svd.singularValues();
    if (nuclear_out) *nuclear_out = nuclear_after_threshold(sv, eps);
    Eigen::Index rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i) {
        sv(i) = std::max(sv(i) - eps, 0.0);
        if (sv(i) > 0.0) rank = i + 1;
    }
    if (rank == 0)
        return Eigen::MatrixXd::Zero(m.rows(), m.cols());
    return svd.matrixU().leftCols(rank) * sv.head(rank).asDiagonal() *
           svd.matrixV().leftCols(rank).transpose();
}

}  // namespace

void SolverConfig::validate() const {
    if (xi && (*xi < 0.0 || !std::isfinite(*xi)))
        throw std::invalid_argument("SolverConfig: xi must be nonnegative");
    if (gamma && (*gamma < 0.0 || !std::isfinite(*gamma)))
        throw std::invalid_argument("SolverConfig: gamma must be nonnegative");
    if (!(rho > 0.0) || !std::isfinite(rho))
        throw std::invalid_argument("SolverConfig: rho must be positive");
    if (mu0 && (!(*mu0 > 0.0) || !std::isfinite(*mu0)))
        throw std::invalid_argument("SolverConfig: mu0 must be positive");
    if (!(tol > 0.0))
        throw std::invalid_argument("SolverConfig: tol must be positive");
    if (max_iter < 1)
        throw std::invalid_argument("SolverConfig: max_iter must be >= 1");
}

Eigen::MatrixXd soft_threshold(const Eigen::MatrixXd& m, double eps) {
    if (eps < 0.0)
        throw std::invalid_argument("soft_threshold: eps must be nonnegative");
    if (!m.allFinite())
        throw std::invalid_argument("soft_threshold: non-finite input");
    return m.unaryExpr([eps](double q) {
        const double mag = std::abs(q) - eps;
        return mag > 0.0 ? (q > 0.0 ? mag : -mag) : 0.0;
    });
}

Eigen::MatrixXd singular_value_threshold(const Eigen::MatrixXd& m, double eps) {
    return svt_impl(m, eps, nullptr);
}

Eigen::MatrixXd update_background(const Eigen::MatrixXd& D, const Eigen::MatrixXd& S,
                                  const Eigen::MatrixXd& N, const Eigen::MatrixXd& Y,
                                  double mu, double xi) {
    if (!(mu > 0.0))
        throw std::invalid_argument("update_background: mu must be positive");
    return singular_value_threshold(D - S - N + Y / mu, xi / mu);
}

Eigen::MatrixXd update_shadow(const Eigen::MatrixXd& D, const Eigen::MatrixXd& B,
                              const Eigen::MatrixXd& N, const Eigen::MatrixXd& Y, double mu) {
    if (!(mu > 0.0))
        throw std::invalid_argument("update_shadow: mu must be positive");
    return soft_threshold(D - B - N + Y / mu, 1.0 / mu);
}

Eigen::MatrixXd update_noise(const Eigen::MatrixXd& D, const Eigen::MatrixXd& B,
                             const Eigen::MatrixXd& S, const Eigen::MatrixXd& Y, double mu,
                             double gamma) {
    if (!(mu > 0.0))
        throw std::invalid_argument("update_noise: mu must be positive");
    if (gamma < 0.0)
        throw std::invalid_argument("update_noise: gamma must be nonnegative");
    return (D - B - S + Y / mu) / (1.0 + 2.0 * gamma / mu);
}

Eigen::MatrixXd update_multiplier(const Eigen::MatrixXd& Y, double mu, const Eigen::MatrixXd& D,
                                  const Eigen::MatrixXd& S, const Eigen::MatrixXd& B,
                                  const Eigen::MatrixXd& N) {
    if (Y.rows() != D.rows() || Y.cols() != D.cols() || S.rows() != D.rows() ||
        B.rows() != D.rows() || N.rows() != D.rows() || S.cols() != D.cols() ||
        B.cols() != D.cols() || N.cols() != D.cols())
        throw std::invalid_argument("update_multiplier: shape mismatch");
    return Y + mu * (D - S - B - N);
}

double update_penalty(double mu, double rho) { return rho * mu; }

double relative_error(const Eigen::MatrixXd& D, const Eigen::MatrixXd& S,
                      const Eigen::MatrixXd& B, const Eigen::MatrixXd& N) {
    const double dn = D.norm();
    if (!(dn > 0.0))
        throw std::invalid_argument("relative_error: ||D||_F must be positive");
    return (D - (B + S + N)).norm() / dn;
}

double estimate_noise_sigma(const Eigen::MatrixXd& mat) {
    if (mat.cols() < 2) return 0.0;
    std::vector<double> diffs;
    diffs.reserve(static_cast<std::size_t>(mat.rows() * (mat.cols() - 1)));
    for (Eigen::Index j = 1; j < mat.cols(); ++j)
        for (Eigen::Index i = 0; i < mat.rows(); ++i)
            diffs.push_back(mat(i, j) - mat(i, j - 1));

    auto median_inplace = [](std::vector<double>& v) {
        const std::size_t mid = v.size() / 2;
        std::nth_element(v.begin(), v.begin() + mid, v.end());
        double m = v[mid];
        if (v.size() % 2 == 0) {
            std::nth_element(v.begin(), v.begin() + mid - 1, v.end());
            m = 0.5 * (m + v[mid - 1]);
        }
        return m;
    };
    const double med = median_inplace(diffs);
    for (double& d : diffs) d = std::abs(d - med);
    const double mad = median_inplace(diffs);
    return mad / 0.6745 / std::sqrt(2.0);
}

DecompositionResult decompose(const MatricizedVideo& mat, const SolverConfig& cfg) {
    cfg.validate();
    const Eigen::MatrixXd& D = mat.matrix;
    if (D.rows() < 1 || D.cols() < 1)
        throw std::invalid_argument("decompose: empty matrix");
    if (!D.allFinite())
        throw std::invalid_argument("decompose: non-finite input");
    const double dn = D.norm();
    if (!(dn > 0.0))
        throw std::invalid_argument("decompose: ||D||_F must be positive");
    if (cfg.confidence_map) {
        if (cfg.confidence_map->rows() != D.rows() || cfg.confidence_map->cols() != D.cols())
            throw std::invalid_argument("decompose: confidence map shape mismatch");
        if (cfg.confidence_map->minCoeff() < 0.0 || cfg.confidence_map->maxCoeff() > 1.0)
            throw std::invalid_argument("decompose: confidence map entries must lie in [0,1]");
    }

    const double xi =
        cfg.xi ? *cfg.xi : std::sqrt(static_cast<double>(std::max(D.rows(), D.cols())));
    double gamma;
    if (cfg.gamma) {
        gamma = *cfg.gamma;
    } else {
        const double sigma = estimate_noise_sigma(D);
        gamma = sigma > 1e-12 ? std::min(kGammaCap, 1.0 / (4.0 * sigma)) : kGammaCap;
    }
    const double sigma1 = top_singular_value(D);
    const double mu0 = cfg.mu0 ? *cfg.mu0 : 1.25 / sigma1;

    DecompositionResult res;
    res.xi_used = xi;
    res.gamma_used = gamma;
    res.mu0_used = mu0;
    Eigen::MatrixXd S = Eigen::MatrixXd::Zero(D.rows(), D.cols());
    Eigen::MatrixXd N = Eigen::MatrixXd::Zero(D.rows(), D.cols());
    Eigen::MatrixXd Y = Eigen::MatrixXd::Zero(D.rows(), D.cols());
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(D.rows(), D.cols());

    double mu = mu0;
    for (int k = 1; k <= cfg.max_iter; ++k) {
        Eigen::MatrixXd Bin = D - S - N + Y / mu;
        if (cfg.confidence_map)
            Bin = Bin.cwiseProduct(*cfg.confidence_map);
        double b_nuclear = 0.0;
        B = svt_impl(Bin, xi / mu, &b_nuclear);
        S = update_shadow(D, B, N, Y, mu);
        N = update_noise(D, B, S, Y, mu, gamma);
        const double err = relative_error(D, S, B, N);
        Y = update_multiplier(Y, mu, D, S, B, N);

        const double objective =
            S.cwiseAbs().sum() + xi * b_nuclear + gamma * N.squaredNorm();
        res.trace.push_back({k, mu, err, objective});
        mu = update_penalty(mu, cfg.rho);
        if (err < cfg.tol) {
            res.converged = true;
            break;
        }
    }
    res.shadow = std::move(S);
    res.background = std::move(B);
    res.noise = std::move(N);
    res.multiplier = std::move(Y);
    return res;
}

double singular_value_cdf(const MatricizedVideo& mat, double k) {
    if (!(k > 0.0) || k > 100.0)
        throw std::invalid_argument("singular_value_cdf: k must lie in (0, 100]");
    if (!mat.matrix.allFinite())
        throw std::invalid_argument("singular_value_cdf: non-finite input");
    Eigen::BDCSVD<Eigen::MatrixXd> svd(mat.matrix);
    const Eigen::VectorXd& sv = svd.singularValues();
    const double total = sv.sum();
    if (!(total > 0.0))
        throw std::invalid_argument("singular_value_cdf: zero matrix");
    const auto n = static_cast<Eigen::Index>(
        std::ceil(k / 100.0 * static_cast<double>(sv.size()) - 1e-12));
    return sv.head(std::max<Eigen::Index>(1, std::min(n, sv.size()))).sum() / total;
}

std::vector<double> singular_value_cdf_curve(const MatricizedVideo& mat) {
    std::vector<double> out;
    out.reserve(100);
    Eigen::BDCSVD<Eigen::MatrixXd> svd(mat.matrix);
    const Eigen::VectorXd& sv = svd.singularValues();
    const double total = sv.sum();
    if (!(total > 0.0))
        throw std::invalid_argument("singular_value_cdf_curve: zero matrix");
    double acc = 0.0;
    Eigen::Index used = 0;
    for (int k = 1; k <= 100; ++k) {
        const auto n = static_cast<Eigen::Index>(
            std::ceil(k / 100.0 * static_cast<double>(sv.size()) - 1e-12));
        const Eigen::Index target = std::max<Eigen::Index>(1, std::min(n, sv.size()));
        while (used < target) acc += sv(used++);
        out.push_back(acc / total);
    }
    return out;
}

}  // namespace sbn
