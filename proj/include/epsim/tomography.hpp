// Two-qubit state tomography over the 16-setting H/V/D/A/R/L projector set:
// linear inversion (may be non-physical) and Poisson maximum-likelihood
// reconstruction over a Cholesky-style parametrization (always physical),
// plus a parametric bootstrap for fidelity error bars.

#pragma once

#include "epsim/engine.hpp"
#include "epsim/optim.hpp"
#include "epsim/qstate.hpp"
#include "epsim/scenario.hpp"

#include <array>
#include <cstdint>
#include <vector>

namespace epsim {

/// The canonical 16 product-projector settings (signal, idler).
const std::vector<std::pair<Analyzer, Analyzer>>& tomography_settings();

/// Setting labels like "HH", "DR", matching tomography_settings() order.
std::vector<std::string> tomography_labels();

struct TomoCounts {
    std::array<double, 16> n{};  // coincidences per setting
    double integration_s = 1.0;

    static TomoCounts from_record(const CountsRecord& rec);
};

/// Expected Born probabilities of each tomography projector for a state.
std::array<double, 16> tomography_probabilities(const DensityMatrix& rho);

/// Linear inversion of normalized counts. Hermitian and trace-normalized,
/// but possibly with negative eigenvalues. Throws on a singular design.
RawMatrix linear_tomography(const TomoCounts& c);

/// Poisson negative log-likelihood (normalized per total count) over the
/// 16 Cholesky parameters plus a log-flux parameter. Exposed for the
/// gradient-vs-finite-difference check.
class TomoObjective {
  public:
    explicit TomoObjective(const TomoCounts& counts);
    static constexpr int kParams = 17;

    double value(const Eigen::VectorXd& x) const;
    ObjectiveValue value_and_gradient(const Eigen::VectorXd& x) const;

    static DensityMatrix state_from_params(const Eigen::VectorXd& x);
    /// Parameters whose state matches rho (flux from the counts).
    Eigen::VectorXd params_from_state(const Matrix4c& rho, double flux) const;

  private:
    std::array<double, 16> n_;
    double total_ = 0.0;
};

struct MleResult {
    DensityMatrix rho = DensityMatrix::maximally_mixed();
    bool converged = false;
    int iterations = 0;
    double gradient_norm = 0.0;
    double log_likelihood = 0.0;  // up to the count-dependent constant
};

struct MleOptions {
    int max_iterations = 10000;
    double gradient_tolerance = 1e-8;
};

/// Maximum-likelihood reconstruction, seeded from the clamped linear
/// inversion. The output is physical for any input counts; non-convergence
/// returns the best iterate flagged.
MleResult mle_tomography(const TomoCounts& c, const MleOptions& opt = {});

struct FidelityEstimate {
    double value = 0.0;
    double sigma = 0.0;
    int resamples = 0;
};

/// Parametric bootstrap: re-sample Poisson counts around the observed
/// values, re-run the MLE, and report mean +- std of the fidelity to the
/// target state.
FidelityEstimate fidelity_with_error(const TomoCounts& c, const DensityMatrix& target,
                                     int resamples, std::uint64_t seed);

/// Convenience for tests: expected counts n_nu = flux * p_nu(rho), either
/// exact or Poisson-sampled.
TomoCounts counts_from_state(const DensityMatrix& rho, double flux, bool poisson,
                             std::uint64_t seed);

}  // namespace epsim
