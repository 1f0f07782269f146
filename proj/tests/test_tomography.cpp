#include "epsim/tomography.hpp"

#include "epsim/rng.hpp"

#include <doctest.h>

#include <cmath>

using namespace epsim;

TEST_CASE("linear tomography inverts exact probabilities") {
    const DensityMatrix bell = DensityMatrix::from_ket(bell_state(BellKind::phi_plus));
    const TomoCounts counts = counts_from_state(bell, 1e6, false, 0);
    const RawMatrix rho = linear_tomography(counts);
    CHECK((rho - bell.entries()).cwiseAbs().maxCoeff() < 1e-9);

    const TomoCounts mixed = counts_from_state(DensityMatrix::maximally_mixed(), 1e6, false, 0);
    CHECK((linear_tomography(mixed) - 0.25 * Matrix4c::Identity()).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("linear tomography on sampled counts is Hermitian with unit trace") {
    const DensityMatrix bell = DensityMatrix::from_ket(bell_state(BellKind::phi_plus));
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const TomoCounts counts = counts_from_state(bell, 1e4, true, seed);
        const RawMatrix rho = linear_tomography(counts);
        CHECK((rho - rho.adjoint()).cwiseAbs().maxCoeff() < 1e-10);
        CHECK(std::abs(rho.trace().real() - 1.0) < 1e-10);
        // Statistical noise on a pure state typically gives a slightly
        // negative eigenvalue; it must stay small.
        Eigen::SelfAdjointEigenSolver<Matrix4c> es(rho);
        CHECK(es.eigenvalues().minCoeff() > -0.05);
    }
}

TEST_CASE("MLE gradient matches central finite differences") {
    const DensityMatrix target = werner_state(0.9);
    const TomoCounts counts = counts_from_state(target, 1e4, true, 7);
    const TomoObjective obj(counts);

    // A generic, non-optimal evaluation point.
    Eigen::VectorXd x = obj.params_from_state(werner_state(0.7).entries(), 3.9e4);
    for (int k = 0; k < TomoObjective::kParams; ++k) x(k) += 0.01 * std::sin(1.0 + k);

    const ObjectiveValue v = obj.value_and_gradient(x);
    for (int k = 0; k < TomoObjective::kParams; ++k) {
        const double h = 1e-6 * std::max(1.0, std::abs(x(k)));
        Eigen::VectorXd xp = x, xm = x;
        xp(k) += h;
        xm(k) -= h;
        const double fd = (obj.value(xp) - obj.value(xm)) / (2.0 * h);
        const double scale = std::max({std::abs(fd), std::abs(v.gradient(k)), 1e-6});
        CHECK(std::abs(v.gradient(k) - fd) / scale < 1e-5);
    }
}

TEST_CASE("MLE reproduces the state from exact counts") {
    const DensityMatrix bell = DensityMatrix::from_ket(bell_state(BellKind::phi_plus));
    const TomoCounts counts = counts_from_state(bell, 1e6, false, 0);
    const MleResult res = mle_tomography(counts);
    CHECK(res.converged);
    CHECK(fidelity(res.rho, bell) > 0.9999);
}

TEST_CASE("MLE on Werner(0.912) counts lands on the reported fidelity") {
    const DensityMatrix target = DensityMatrix::from_ket(bell_state(BellKind::phi_plus));
    const TomoCounts counts = counts_from_state(werner_state(0.912), 1e5, true, 11);
    const MleResult res = mle_tomography(counts);
    CHECK(res.converged);
    const double f = fidelity(res.rho, target);
    CHECK(std::abs(f - 0.934) < 0.02);
    CHECK(is_physical(res.rho.entries()).ok());
}

TEST_CASE("MLE output is physical for arbitrary count inputs") {
    Rng rng(stream_key(2025, 0x544f4dull));
    for (int trial = 0; trial < 25; ++trial) {
        TomoCounts counts;
        for (auto& v : counts.n) v = std::floor(rng.uniform() * 1000.0);
        if (counts.n[0] + counts.n[1] + counts.n[2] + counts.n[3] < 4) {
            counts.n[0] += 10;  // keep the flux block populated
            counts.n[2] += 10;
        }
        const MleResult res = mle_tomography(counts);
        CHECK(is_physical(res.rho.entries()).ok());
    }
}

TEST_CASE("fidelity converges toward 1 with growing statistics") {
    const DensityMatrix bell = DensityMatrix::from_ket(bell_state(BellKind::phi_plus));
    double prev_err = 1.0;
    int improvements = 0;
    for (const double flux : {1e2, 1e3, 1e4, 1e5}) {
        double err = 0.0;
        for (std::uint64_t seed = 1; seed <= 3; ++seed) {
            const TomoCounts counts = counts_from_state(bell, flux, true, seed);
            err += 1.0 - fidelity(mle_tomography(counts).rho, bell);
        }
        err /= 3.0;
        if (err < prev_err) ++improvements;
        prev_err = err;
    }
    CHECK(improvements >= 3);
    CHECK(prev_err < 5e-3);
}

TEST_CASE("bootstrap fidelity error scales down with statistics") {
    const DensityMatrix target = DensityMatrix::from_ket(bell_state(BellKind::phi_plus));
    const TomoCounts small = counts_from_state(werner_state(0.912), 1e3, true, 21);
    const TomoCounts large = counts_from_state(werner_state(0.912), 1e5, true, 22);
    const FidelityEstimate e_small = fidelity_with_error(small, target, 120, 5);
    const FidelityEstimate e_large = fidelity_with_error(large, target, 120, 6);
    CHECK(e_small.sigma > e_large.sigma);
    // 1/sqrt(N) trend: a factor 100 in counts is a factor ~10 in sigma.
    CHECK(e_small.sigma / e_large.sigma > 3.0);
    CHECK(e_small.sigma / e_large.sigma < 33.0);

    CHECK_THROWS(fidelity_with_error(small, target, 50, 1));
}
