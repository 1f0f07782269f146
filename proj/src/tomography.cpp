#include "epsim/tomography.hpp"

#include "epsim/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace epsim {

namespace {

constexpr std::uint64_t kSaltBootstrap = 0x424f4f54ull;

// Lower-triangular parameter layout: diagonal first (real), then the
// complex sub-diagonal entries as (real, imag) pairs.
struct TriSlot {
    int row, col;
    bool imag;
};
constexpr std::array<TriSlot, 16> kSlots{{{0, 0, false},
                                          {1, 1, false},
                                          {2, 2, false},
                                          {3, 3, false},
                                          {1, 0, false},
                                          {1, 0, true},
                                          {2, 0, false},
                                          {2, 0, true},
                                          {2, 1, false},
                                          {2, 1, true},
                                          {3, 0, false},
                                          {3, 0, true},
                                          {3, 1, false},
                                          {3, 1, true},
                                          {3, 2, false},
                                          {3, 2, true}}};

Matrix4c t_matrix(const Eigen::VectorXd& x) {
    Matrix4c t = Matrix4c::Zero();
    for (std::size_t k = 0; k < kSlots.size(); ++k) {
        const auto& s = kSlots[k];
        t(s.row, s.col) += s.imag ? Complex(0.0, x(static_cast<Eigen::Index>(k)))
                                  : Complex(x(static_cast<Eigen::Index>(k)), 0.0);
    }
    return t;
}

const std::array<Matrix4c, 16>& tomo_projectors() {
    static const std::array<Matrix4c, 16> projs = [] {
        std::array<Matrix4c, 16> out;
        const auto& settings = tomography_settings();
        for (std::size_t v = 0; v < 16; ++v)
            out[v] = Projector::product(settings[v].first.ket(), settings[v].second.ket()).entries();
        return out;
    }();
    return projs;
}

}  // namespace

const std::vector<std::pair<Analyzer, Analyzer>>& tomography_settings() {
    static const std::vector<std::pair<Analyzer, Analyzer>> settings = [] {
        const char* pairs[16] = {"HH", "HV", "VV", "VH", "RH", "RV", "DV", "DH",
                                 "DR", "DD", "RD", "HD", "VD", "VL", "HL", "RL"};
        std::vector<std::pair<Analyzer, Analyzer>> out;
        out.reserve(16);
        for (const char* p : pairs)
            out.push_back({Analyzer::from_named(p[0]), Analyzer::from_named(p[1])});
        return out;
    }();
    return settings;
}

std::vector<std::string> tomography_labels() {
    std::vector<std::string> labels;
    labels.reserve(16);
    for (const auto& [a, b] : tomography_settings()) labels.push_back(a.label() + b.label());
    return labels;
}

TomoCounts TomoCounts::from_record(const CountsRecord& rec) {
    if (rec.rows.size() != 16)
        throw std::invalid_argument("TomoCounts: need exactly 16 rows");
    TomoCounts c;
    c.integration_s = rec.integration_s;
    for (std::size_t v = 0; v < 16; ++v)
        c.n[v] = static_cast<double>(rec.rows[v].coincidences);
    return c;
}

std::array<double, 16> tomography_probabilities(const DensityMatrix& rho) {
    std::array<double, 16> p{};
    const auto& projs = tomo_projectors();
    for (std::size_t v = 0; v < 16; ++v)
        p[v] = std::clamp((rho.entries() * projs[v]).trace().real(), 0.0, 1.0);
    return p;
}

RawMatrix linear_tomography(const TomoCounts& c) {
    // Flux estimate from the complete H/V basis block (HH, HV, VV, VH).
    const double flux = c.n[0] + c.n[1] + c.n[2] + c.n[3];
    if (flux <= 0.0) throw std::invalid_argument("linear_tomography: empty H/V block");

    // Hermitian Pauli-product basis, rho = sum_m x_m (sigma_i x sigma_j)/4.
    static const std::array<Eigen::Matrix2cd, 4> paulis = [] {
        std::array<Eigen::Matrix2cd, 4> s;
        s[0] = Eigen::Matrix2cd::Identity();
        s[1] << 0, 1, 1, 0;
        s[2] << 0, Complex(0, -1), Complex(0, 1), 0;
        s[3] << 1, 0, 0, -1;
        return s;
    }();
    static const std::array<Matrix4c, 16> basis = [] {
        std::array<Matrix4c, 16> b;
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) {
                Matrix4c m;
                for (int r = 0; r < 2; ++r)
                    for (int cc = 0; cc < 2; ++cc)
                        m.block<2, 2>(2 * r, 2 * cc) = paulis[static_cast<std::size_t>(i)](r, cc) *
                                                       paulis[static_cast<std::size_t>(j)];
                b[static_cast<std::size_t>(4 * i + j)] = 0.25 * m;
            }
        return b;
    }();

    Eigen::Matrix<double, 16, 16> design;
    const auto& projs = tomo_projectors();
    for (int v = 0; v < 16; ++v)
        for (int m = 0; m < 16; ++m)
            design(v, m) = (projs[static_cast<std::size_t>(v)] * basis[static_cast<std::size_t>(m)])
                               .trace()
                               .real();
    Eigen::FullPivLU<Eigen::Matrix<double, 16, 16>> lu(design);
    if (!lu.isInvertible())
        throw std::runtime_error("linear_tomography: singular design matrix");

    Eigen::Matrix<double, 16, 1> p;
    for (int v = 0; v < 16; ++v) p(v) = c.n[static_cast<std::size_t>(v)] / flux;
    const Eigen::Matrix<double, 16, 1> x = lu.solve(p);

    Matrix4c rho = Matrix4c::Zero();
    for (int m = 0; m < 16; ++m) rho += x(m) * basis[static_cast<std::size_t>(m)];
    rho = 0.5 * (rho + rho.adjoint().eval());
    const double tr = rho.trace().real();
    if (std::abs(tr) < 1e-12) throw std::runtime_error("linear_tomography: zero trace");
    return rho / tr;
}

TomoObjective::TomoObjective(const TomoCounts& counts) : n_(counts.n) {
    for (const double v : n_) {
        if (v < 0.0) throw std::invalid_argument("TomoObjective: negative count");
        total_ += v;
    }
    if (total_ <= 0.0) throw std::invalid_argument("TomoObjective: all counts zero");
}

DensityMatrix TomoObjective::state_from_params(const Eigen::VectorXd& x) {
    const Matrix4c t = t_matrix(x);
    Matrix4c g = t * t.adjoint();
    const double tau = g.trace().real();
    if (tau <= 0.0) throw std::runtime_error("state_from_params: zero normalization");
    g /= tau;
    g = 0.5 * (g + g.adjoint().eval());
    return DensityMatrix(g);
}

Eigen::VectorXd TomoObjective::params_from_state(const Matrix4c& rho, double flux) const {
    // Clamp to strictly positive eigenvalues so the Cholesky factor exists.
    Eigen::SelfAdjointEigenSolver<Matrix4c> solver(0.5 * (rho + rho.adjoint()));
    Eigen::Vector4d ev = solver.eigenvalues().cwiseMax(1e-6);
    Matrix4c psd = solver.eigenvectors() * ev.asDiagonal() * solver.eigenvectors().adjoint();
    psd /= psd.trace().real();
    const Eigen::LLT<Matrix4c> llt(psd);
    Matrix4c t = llt.matrixL();

    Eigen::VectorXd x(kParams);
    for (std::size_t k = 0; k < kSlots.size(); ++k) {
        const auto& s = kSlots[k];
        x(static_cast<Eigen::Index>(k)) = s.imag ? t(s.row, s.col).imag() : t(s.row, s.col).real();
    }
    x(16) = std::log(std::max(flux, 1.0));
    return x;
}

double TomoObjective::value(const Eigen::VectorXd& x) const {
    return value_and_gradient(x).value;
}

ObjectiveValue TomoObjective::value_and_gradient(const Eigen::VectorXd& x) const {
    const Matrix4c t = t_matrix(x);
    const Matrix4c g = t * t.adjoint();
    const double tau = std::max(g.trace().real(), 1e-300);
    const double flux = std::exp(x(16));
    const auto& projs = tomo_projectors();

    ObjectiveValue out;
    out.gradient = Eigen::VectorXd::Zero(kParams);
    double nll = 0.0;
    double dflux = 0.0;

    // d tau / d t_k, shared across settings.
    std::array<double, 16> dtau{};
    for (std::size_t k = 0; k < kSlots.size(); ++k) {
        const auto& s = kSlots[k];
        dtau[k] = 2.0 * (s.imag ? t(s.row, s.col).imag() : t(s.row, s.col).real());
    }

    for (std::size_t v = 0; v < 16; ++v) {
        const Matrix4c& proj = projs[v];
        const double q = (g * proj).trace().real();
        const double p = std::max(q / tau, 1e-15);
        const double mean = flux * p;
        nll += mean - n_[v] * std::log(mean);
        dflux += mean - n_[v];

        const double w = flux - n_[v] / p;  // d nll / d p
        const Matrix4c pt = proj * t;
        for (std::size_t k = 0; k < kSlots.size(); ++k) {
            const auto& s = kSlots[k];
            const Complex z = pt(s.row, s.col);
            const double dq = 2.0 * (s.imag ? z.imag() : z.real());
            const double dp = (dq - p * dtau[k]) / tau;
            out.gradient(static_cast<Eigen::Index>(k)) += w * dp;
        }
    }
    out.value = nll / total_;
    out.gradient /= total_;
    out.gradient(16) = dflux / total_;
    return out;
}

MleResult mle_tomography(const TomoCounts& c, const MleOptions& opt) {
    const TomoObjective objective(c);

    // Seed from the clamped linear inversion; fall back to the maximally
    // mixed state if the inversion fails.
    Matrix4c seed_state = 0.25 * Matrix4c::Identity();
    try {
        seed_state = linear_tomography(c);
    } catch (const std::exception&) {
    }
    double flux = 0.0;
    for (const double v : c.n) flux += v;
    flux = std::max(flux / 4.0, 1.0);  // sum p_nu over the 16 settings is ~4
    const Eigen::VectorXd x0 = objective.params_from_state(seed_state, flux);

    LbfgsOptions lopt;
    lopt.max_iterations = opt.max_iterations;
    lopt.gradient_tolerance = opt.gradient_tolerance;
    const LbfgsResult r = minimize_lbfgs(
        [&](const Eigen::VectorXd& x) { return objective.value_and_gradient(x); }, x0, lopt);

    MleResult res;
    res.rho = TomoObjective::state_from_params(r.x);
    res.converged = r.converged;
    res.iterations = r.iterations;
    res.gradient_norm = r.gradient_norm;
    res.log_likelihood = -r.value;
    return res;
}

FidelityEstimate fidelity_with_error(const TomoCounts& c, const DensityMatrix& target,
                                     int resamples, std::uint64_t seed) {
    if (resamples < 100)
        throw std::invalid_argument("fidelity_with_error: need at least 100 resamples");
    double sum = 0.0, sum2 = 0.0;
    for (int r = 0; r < resamples; ++r) {
        Rng rng(stream_key(seed, kSaltBootstrap, static_cast<std::uint64_t>(r)));
        TomoCounts resampled = c;
        for (auto& v : resampled.n) v = static_cast<double>(rng.poisson(v));
        const MleResult mle = mle_tomography(resampled);
        const double f = fidelity(mle.rho, target);
        sum += f;
        sum2 += f * f;
    }
    FidelityEstimate est;
    est.resamples = resamples;
    est.value = sum / resamples;
    const double var = (sum2 - sum * sum / resamples) / std::max(resamples - 1, 1);
    est.sigma = std::sqrt(std::max(var, 0.0));
    return est;
}

TomoCounts counts_from_state(const DensityMatrix& rho, double flux, bool poisson,
                             std::uint64_t seed) {
    const auto p = tomography_probabilities(rho);
    TomoCounts c;
    for (std::size_t v = 0; v < 16; ++v) {
        const double mean = flux * p[v];
        if (poisson) {
            Rng rng(stream_key(seed, 0x544f4d4full, v));
            c.n[v] = static_cast<double>(rng.poisson(mean));
        } else {
            c.n[v] = mean;
        }
    }
    return c;
}

}  // namespace epsim
