#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include <Eigen/SVD>

#include "sbn/solver.hpp"
#include "test_helpers.hpp"

using namespace sbn;
using sbn::test::random_matrix;

namespace {

double soft_scalar(double q, double eps) {
    const double m = std::abs(q) - eps;
    return m > 0.0 ? (q > 0.0 ? m : -m) : 0.0;
}

// independent reconstruction route for the singular-value prox
Eigen::MatrixXd svt_oracle(const Eigen::MatrixXd& m, double eps) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    Eigen::VectorXd sv = svd.singularValues();
    for (Eigen::Index i = 0; i < sv.size(); ++i) sv(i) = std::max(sv(i) - eps, 0.0);
    return svd.matrixU() * sv.asDiagonal() * svd.matrixV().transpose();
}

double nuclear_norm(const Eigen::MatrixXd& m) {
    return Eigen::JacobiSVD<Eigen::MatrixXd>(m).singularValues().sum();
}

MatricizedVideo wrap(const Eigen::MatrixXd& m) {
    return MatricizedVideo{m.rows(), m.cols(), m};
}

}  // namespace

TEST_CASE("soft_threshold: definition, dead zone, oracle") {
    Eigen::MatrixXd m(1, 3);
    m << 0.5, -0.5, 0.1;
    const Eigen::MatrixXd r = soft_threshold(m, 0.2);
    CHECK(r(0, 0) == doctest::Approx(0.3).epsilon(1e-15));
    CHECK(r(0, 1) == doctest::Approx(-0.3).epsilon(1e-15));
    CHECK(r(0, 2) == 0.0);

    CHECK_THROWS_AS(soft_threshold(m, -0.1), std::invalid_argument);

    Rng rng(11);
    const Eigen::MatrixXd x = random_matrix(rng, 8, 8, 2.0);
    const Eigen::MatrixXd y = soft_threshold(x, 0.37);
    for (Eigen::Index i = 0; i < 8; ++i)
        for (Eigen::Index j = 0; j < 8; ++j)
            CHECK(y(i, j) == doctest::Approx(soft_scalar(x(i, j), 0.37)).epsilon(1e-12));
}

TEST_CASE("singular_value_threshold: analytic diagonal case and edge cases") {
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(2, 2);
    d(0, 0) = 3.0;
    d(1, 1) = 1.0;
    const Eigen::MatrixXd r = singular_value_threshold(d, 2.0);
    CHECK(r(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(r(1, 1)) < 1e-12);
    CHECK(std::abs(r(0, 1)) < 1e-12);

    Rng rng(13);
    const Eigen::MatrixXd x = random_matrix(rng, 6, 4);
    CHECK((singular_value_threshold(x, 0.0) - x).norm() < 1e-10);

    const double s1 = Eigen::JacobiSVD<Eigen::MatrixXd>(x).singularValues()(0);
    CHECK(singular_value_threshold(x, s1 * 1.001).norm() == 0.0);

    // rank never increases
    Eigen::MatrixXd lowrank = random_matrix(rng, 6, 2) * random_matrix(rng, 2, 4);
    const Eigen::MatrixXd shrunk = singular_value_threshold(lowrank, 0.1);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(shrunk);
    CHECK(svd.singularValues()(2) < 1e-10);
}

TEST_CASE("singular_value_threshold matches an independent SVD route") {
    Rng rng(17);
    for (int t = 0; t < 25; ++t) {
        const Eigen::MatrixXd x = random_matrix(rng, 8, 5);
        const double eps = 0.3 * rng.next_uniform();
        CHECK((singular_value_threshold(x, eps) - svt_oracle(x, eps)).norm() < 1e-8);
    }
}

TEST_CASE("prox operators are non-expansive") {
    Rng rng(19);
    for (int t = 0; t < 20; ++t) {
        const Eigen::MatrixXd a = random_matrix(rng, 7, 5);
        const Eigen::MatrixXd b = random_matrix(rng, 7, 5);
        const double eps = 0.4 * rng.next_uniform();
        CHECK((soft_threshold(a, eps) - soft_threshold(b, eps)).norm() <= (a - b).norm() + 1e-12);
        CHECK((singular_value_threshold(a, eps) - singular_value_threshold(b, eps)).norm() <=
              (a - b).norm() + 1e-9);
    }
}

TEST_CASE("update_background") {
    Rng rng(29);
    const Eigen::MatrixXd D = random_matrix(rng, 8, 5);
    const Eigen::MatrixXd Z = Eigen::MatrixXd::Zero(8, 5);

    const double s1 = Eigen::JacobiSVD<Eigen::MatrixXd>(D).singularValues()(0);
    CHECK(update_background(D, Z, Z, Z, 1.0, s1 * 1.01).norm() == 0.0);

    const Eigen::MatrixXd S = random_matrix(rng, 8, 5, 0.1);
    const Eigen::MatrixXd N = random_matrix(rng, 8, 5, 0.1);
    const Eigen::MatrixXd Y = random_matrix(rng, 8, 5, 0.1);
    const Eigen::MatrixXd expect = D - S - N + Y / 2.0;
    CHECK((update_background(D, S, N, Y, 2.0, 0.0) - expect).norm() < 1e-10);

    CHECK_THROWS_AS(update_background(D, Z, Z, Z, 0.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(update_background(D, Z, Z, Z, -1.0, 1.0), std::invalid_argument);
}

TEST_CASE("update_shadow") {
    Rng rng(31);
    const Eigen::MatrixXd Z = Eigen::MatrixXd::Zero(6, 4);
    const Eigen::MatrixXd small = random_matrix(rng, 6, 4, 0.05);
    // every residual entry below 1/mu in magnitude dies
    CHECK(update_shadow(small, Z, Z, Z, 10.0).norm() == 0.0);

    // large mu: threshold vanishes, S approaches the residual
    const Eigen::MatrixXd D = random_matrix(rng, 6, 4);
    const Eigen::MatrixXd s = update_shadow(D, Z, Z, Z, 1e9);
    CHECK((s - D).cwiseAbs().maxCoeff() <= 1.0 / 1e9 + 1e-15);

    CHECK_THROWS_AS(update_shadow(D, Z, Z, Z, 0.0), std::invalid_argument);
}

TEST_CASE("update_noise") {
    Rng rng(37);
    const Eigen::MatrixXd D = random_matrix(rng, 6, 4);
    const Eigen::MatrixXd B = random_matrix(rng, 6, 4, 0.3);
    const Eigen::MatrixXd S = random_matrix(rng, 6, 4, 0.3);
    const Eigen::MatrixXd Y = random_matrix(rng, 6, 4, 0.3);

    // gamma = 0 passes the residual through
    const Eigen::MatrixXd resid = D - B - S + Y / 2.0;
    CHECK((update_noise(D, B, S, Y, 2.0, 0.0) - resid).norm() < 1e-12);

    // enormous gamma/mu kills N
    CHECK(update_noise(D, B, S, Y, 1.0, 1e12).norm() < 1e-9);

    // direct formula recomputation
    const double mu = 1.7, gamma = 2.3;
    const Eigen::MatrixXd expect = (D - B - S + Y / mu) / (1.0 + 2.0 * gamma / mu);
    CHECK((update_noise(D, B, S, Y, mu, gamma) - expect).norm() < 1e-12);

    CHECK_THROWS_AS(update_noise(D, B, S, Y, 1.0, -0.5), std::invalid_argument);
}

TEST_CASE("update_multiplier") {
    Rng rng(41);
    const Eigen::MatrixXd D = random_matrix(rng, 5, 5);
    const Eigen::MatrixXd B = 0.5 * D;
    const Eigen::MatrixXd S = 0.3 * D;
    const Eigen::MatrixXd N = 0.2 * D;
    const Eigen::MatrixXd Y = random_matrix(rng, 5, 5);

    // exact split leaves Y unchanged
    CHECK((update_multiplier(Y, 3.0, D, S, B, N) - Y).norm() < 1e-12);

    const Eigen::MatrixXd Z = Eigen::MatrixXd::Zero(5, 5);
    CHECK((update_multiplier(Z, 1.0, D, Z, Z, Z) - D).norm() == 0.0);

    const double mu = 2.5;
    const Eigen::MatrixXd S2 = random_matrix(rng, 5, 5, 0.2);
    const Eigen::MatrixXd expect = Y + mu * (D - S2 - B - N);
    CHECK((update_multiplier(Y, mu, D, S2, B, N) - expect).norm() < 1e-12);

    CHECK_THROWS_AS(update_multiplier(Y, 1.0, D, Eigen::MatrixXd::Zero(4, 5), B, N),
                    std::invalid_argument);
}

TEST_CASE("update_penalty") {
    CHECK(update_penalty(3.0, 1.0) == 3.0);
    CHECK(update_penalty(update_penalty(2.0, 0.9), 0.9) == doctest::Approx(1.62).epsilon(1e-12));
    CHECK(update_penalty(2.0, 1.5) == 3.0);  // growing schedules are allowed
}

TEST_CASE("relative_error") {
    Rng rng(43);
    const Eigen::MatrixXd D = random_matrix(rng, 6, 6);
    const Eigen::MatrixXd Z = Eigen::MatrixXd::Zero(6, 6);
    CHECK(relative_error(D, 0.2 * D, 0.5 * D, 0.3 * D) < 1e-12);
    CHECK(relative_error(D, Z, Z, Z) == doctest::Approx(1.0).epsilon(1e-12));

    const Eigen::MatrixXd S = random_matrix(rng, 6, 6, 0.2);
    const Eigen::MatrixXd B = random_matrix(rng, 6, 6, 0.2);
    const Eigen::MatrixXd N = random_matrix(rng, 6, 6, 0.2);
    CHECK(relative_error(D, S, B, N) ==
          doctest::Approx((D - (B + S + N)).norm() / D.norm()).epsilon(1e-12));

    CHECK_THROWS_AS(relative_error(Z, Z, Z, Z), std::invalid_argument);
}

TEST_CASE("each update minimizes its sub-objective against random perturbations") {
    Rng rng(47);
    const double mu = 1.3, xi = 0.8, gamma = 0.6;
    for (int inst = 0; inst < 5; ++inst) {
        const Eigen::MatrixXd D = random_matrix(rng, 8, 5);
        const Eigen::MatrixXd S = random_matrix(rng, 8, 5, 0.3);
        const Eigen::MatrixXd N = random_matrix(rng, 8, 5, 0.3);
        const Eigen::MatrixXd Y = random_matrix(rng, 8, 5, 0.3);

        const Eigen::MatrixXd Qb = D - S - N + Y / mu;
        const Eigen::MatrixXd B = update_background(D, S, N, Y, mu, xi);
        const Eigen::MatrixXd Qs = D - B - N + Y / mu;
        const Eigen::MatrixXd Sh = update_shadow(D, B, N, Y, mu);
        const Eigen::MatrixXd Qn = D - B - Sh + Y / mu;
        const Eigen::MatrixXd Nn = update_noise(D, B, Sh, Y, mu, gamma);

        auto fb = [&](const Eigen::MatrixXd& X) {
            return xi * nuclear_norm(X) + 0.5 * mu * (X - Qb).squaredNorm();
        };
        auto fs = [&](const Eigen::MatrixXd& X) {
            return X.cwiseAbs().sum() + 0.5 * mu * (X - Qs).squaredNorm();
        };
        auto fn = [&](const Eigen::MatrixXd& X) {
            return gamma * X.squaredNorm() + 0.5 * mu * (X - Qn).squaredNorm();
        };

        const double vb = fb(B), vs = fs(Sh), vn = fn(Nn);
        for (int p = 0; p < 30; ++p) {
            Eigen::MatrixXd P = random_matrix(rng, 8, 5);
            P *= (0.1 * rng.next_uniform()) / P.norm();
            CHECK(vb <= fb(B + P) + 1e-9);
            CHECK(vs <= fs(Sh + P) + 1e-9);
            CHECK(vn <= fn(Nn + P) + 1e-9);
        }
    }
}

TEST_CASE("decompose recovers a constructed sparse + static low-rank split") {
    // static background (identical columns) plus sparse spikes of magnitude
    // >= 0.3 at about 1% density
    Rng rng(53);
    const Eigen::Index nc = 400, f = 50;
    Eigen::VectorXd profile(nc);
    for (Eigen::Index i = 0; i < nc; ++i)
        profile(i) = 0.4 + 0.3 * std::sin(0.02 * static_cast<double>(i));
    Eigen::MatrixXd B_true = profile.replicate(1, f);

    Eigen::MatrixXd S_true = Eigen::MatrixXd::Zero(nc, f);
    const int spikes = static_cast<int>(nc * f / 100);
    for (int s = 0; s < spikes; ++s) {
        const auto i = static_cast<Eigen::Index>(rng.next_u64() % nc);
        const auto j = static_cast<Eigen::Index>(rng.next_u64() % f);
        const double magnitude = 0.3 + 0.7 * rng.next_uniform();
        S_true(i, j) = rng.next_uniform() < 0.5 ? -magnitude : magnitude;
    }

    const Eigen::MatrixXd D = B_true + S_true;
    const DecompositionResult res = decompose(wrap(D));

    CHECK(res.converged);
    CHECK((res.shadow - S_true).norm() / S_true.norm() <= 0.05);
    CHECK((res.background - B_true).norm() / B_true.norm() <= 0.05);
    CHECK(res.trace.back().rel_error < 1e-3);
}

TEST_CASE("decompose routes an isolated spike into the sparse component") {
    Eigen::MatrixXd D = Eigen::MatrixXd::Zero(8, 8);
    D(2, 3) = 1.0;
    const DecompositionResult res = decompose(wrap(D));
    CHECK(res.shadow(2, 3) == doctest::Approx(1.0).epsilon(0.05));
    CHECK(res.background.norm() <= 0.05);
}

TEST_CASE("decompose trace and termination invariants") {
    Rng rng(59);
    Eigen::MatrixXd D = random_matrix(rng, 30, 10, 0.5);
    SolverConfig cfg;
    cfg.max_iter = 40;

    const DecompositionResult res = decompose(wrap(D), cfg);
    REQUIRE(!res.trace.empty());
    CHECK(res.trace.size() <= 40);
    if (res.converged)
        CHECK(res.trace.back().rel_error < cfg.tol);
    else
        CHECK(res.trace.size() == 40);

    // penalty follows the schedule and iterations are numbered from 1
    for (std::size_t k = 0; k < res.trace.size(); ++k) {
        CHECK(res.trace[k].iter == static_cast<int>(k) + 1);
        if (k > 0)
            CHECK(res.trace[k].mu ==
                  doctest::Approx(res.trace[k - 1].mu * cfg.rho).epsilon(1e-12));
    }
    CHECK(res.trace.front().mu == doctest::Approx(res.mu0_used).epsilon(1e-12));

    // hard cap: one iteration, flagged as non-converged
    SolverConfig one;
    one.max_iter = 1;
    one.tol = 1e-12;
    const DecompositionResult r1 = decompose(wrap(D), one);
    CHECK(!r1.converged);
    CHECK(r1.trace.size() == 1);
}

TEST_CASE("decompose is deterministic") {
    Rng rng(61);
    const Eigen::MatrixXd D = random_matrix(rng, 40, 12, 0.5);
    const DecompositionResult a = decompose(wrap(D));
    const DecompositionResult b = decompose(wrap(D));
    CHECK(a.shadow == b.shadow);
    CHECK(a.background == b.background);
    CHECK(a.noise == b.noise);
    CHECK(a.trace.size() == b.trace.size());
}

TEST_CASE("decompose validates inputs and configuration") {
    const Eigen::MatrixXd Z = Eigen::MatrixXd::Zero(4, 4);
    CHECK_THROWS_AS(decompose(wrap(Z)), std::invalid_argument);

    Eigen::MatrixXd nan = Eigen::MatrixXd::Ones(4, 4);
    nan(1, 1) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(decompose(wrap(nan)), std::invalid_argument);

    Rng rng(67);
    const Eigen::MatrixXd D = random_matrix(rng, 6, 4);
    SolverConfig bad;
    bad.rho = 0.0;
    CHECK_THROWS_AS(decompose(wrap(D), bad), std::invalid_argument);
    bad = {};
    bad.tol = 0.0;
    CHECK_THROWS_AS(decompose(wrap(D), bad), std::invalid_argument);
    bad = {};
    bad.max_iter = 0;
    CHECK_THROWS_AS(decompose(wrap(D), bad), std::invalid_argument);
    bad = {};
    bad.xi = -1.0;
    CHECK_THROWS_AS(decompose(wrap(D), bad), std::invalid_argument);
}

TEST_CASE("confidence map hook") {
    Rng rng(71);
    const Eigen::MatrixXd D = random_matrix(rng, 12, 6, 0.5);

    SolverConfig plain;
    SolverConfig ones = plain;
    ones.confidence_map = Eigen::MatrixXd::Ones(12, 6);
    const DecompositionResult a = decompose(wrap(D), plain);
    const DecompositionResult b = decompose(wrap(D), ones);
    CHECK(a.shadow == b.shadow);
    CHECK(a.background == b.background);

    SolverConfig zeros = plain;
    zeros.confidence_map = Eigen::MatrixXd::Zero(12, 6);
    const DecompositionResult c = decompose(wrap(D), zeros);
    CHECK(c.background.norm() == 0.0);  // B-update input fully suppressed

    SolverConfig badshape = plain;
    badshape.confidence_map = Eigen::MatrixXd::Ones(3, 3);
    CHECK_THROWS_AS(decompose(wrap(D), badshape), std::invalid_argument);

    SolverConfig badrange = plain;
    badrange.confidence_map = 2.0 * Eigen::MatrixXd::Ones(12, 6);
    CHECK_THROWS_AS(decompose(wrap(D), badrange), std::invalid_argument);
}

TEST_CASE("estimate_noise_sigma") {
    // static columns: zero estimate
    Eigen::MatrixXd staticmat = Eigen::VectorXd::LinSpaced(50, 0.0, 1.0).replicate(1, 20);
    CHECK(estimate_noise_sigma(staticmat) == 0.0);

    Rng rng(73);
    const double sigma = 0.05;
    Eigen::MatrixXd noisy = staticmat;
    for (Eigen::Index j = 0; j < noisy.cols(); ++j)
        for (Eigen::Index i = 0; i < noisy.rows(); ++i)
            noisy(i, j) += sigma * rng.next_gaussian();
    CHECK(estimate_noise_sigma(noisy) == doctest::Approx(sigma).epsilon(0.15));
}

TEST_CASE("singular_value_cdf") {
    Rng rng(79);

    // rank-1: all mass in the first singular value
    Eigen::MatrixXd r1 = random_matrix(rng, 10, 1) * random_matrix(rng, 1, 6);
    for (double k : {1.0, 7.5, 50.0, 100.0})
        CHECK(singular_value_cdf(wrap(r1), k) == doctest::Approx(1.0).epsilon(1e-10));

    // identity: equal singular values
    const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(10, 10);
    CHECK(singular_value_cdf(wrap(eye), 50.0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(singular_value_cdf(wrap(eye), 10.0) == doctest::Approx(0.1).epsilon(1e-12));

    const Eigen::MatrixXd x = random_matrix(rng, 12, 8);
    CHECK(singular_value_cdf(wrap(x), 100.0) == doctest::Approx(1.0).epsilon(1e-12));

    double prev = 0.0;
    for (int k = 1; k <= 100; ++k) {
        const double c = singular_value_cdf(wrap(x), static_cast<double>(k));
        CHECK(c >= prev - 1e-12);
        prev = c;
    }

    const std::vector<double> curve = singular_value_cdf_curve(wrap(x));
    REQUIRE(curve.size() == 100);
    CHECK(curve[99] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(curve[49] == doctest::Approx(singular_value_cdf(wrap(x), 50.0)).epsilon(1e-12));

    CHECK_THROWS_AS(singular_value_cdf(wrap(x), 0.0), std::invalid_argument);
    CHECK_THROWS_AS(singular_value_cdf(wrap(x), 101.0), std::invalid_argument);
    CHECK_THROWS_AS(singular_value_cdf(wrap(Eigen::MatrixXd::Zero(4, 4)), 50.0),
                    std::invalid_argument);
}
