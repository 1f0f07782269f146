#include "epsim/qstate.hpp"

#include <cmath>
#include <stdexcept>

namespace epsim {

namespace {
const Complex kI(0.0, 1.0);

double hermiticity_error(const Matrix4c& m) {
    return (m - m.adjoint()).cwiseAbs().maxCoeff();
}
}  // namespace

Ket2Q::Ket2Q(const Vector4c& amplitudes) : amp_(amplitudes) {
    const double n = amp_.norm();
    if (n <= 0.0) throw std::invalid_argument("Ket2Q: zero amplitude vector");
    amp_ /= n;
}

Ket2Q::Ket2Q(Complex a00, Complex a01, Complex a10, Complex a11)
    : Ket2Q(Vector4c(a00, a01, a10, a11)) {}

DensityMatrix Ket2Q::projector_state() const { return DensityMatrix::from_ket(*this); }

std::vector<std::string> PhysicalityReport::violations() const {
    std::vector<std::string> v;
    if (!hermitian) v.push_back("not Hermitian");
    if (!unit_trace) v.push_back("trace != 1");
    if (!positive) v.push_back("negative eigenvalue");
    return v;
}

PhysicalityReport is_physical(const RawMatrix& m) {
    PhysicalityReport r;
    r.hermiticity_error = hermiticity_error(m);
    r.hermitian = r.hermiticity_error <= tol::algebraic;
    const Complex tr = m.trace();
    r.trace_real = tr.real();
    r.trace_imag = tr.imag();
    r.unit_trace = std::abs(tr.real() - 1.0) <= tol::algebraic &&
                   std::abs(tr.imag()) <= tol::algebraic;
    // Eigenvalues of the Hermitian part; meaningful only when hermitian.
    Eigen::SelfAdjointEigenSolver<Matrix4c> solver(0.5 * (m + m.adjoint()));
    r.min_eigenvalue = solver.eigenvalues().minCoeff();
    r.positive = r.min_eigenvalue >= -tol::physicality;
    return r;
}

DensityMatrix::DensityMatrix(const Matrix4c& entries) : m_(entries) {
    const auto report = is_physical(m_);
    if (!report.ok()) {
        std::string what = "DensityMatrix: ";
        for (const auto& v : report.violations()) what += v + "; ";
        throw std::invalid_argument(what);
    }
}

DensityMatrix DensityMatrix::from_ket(const Ket2Q& psi) {
    const Vector4c& a = psi.amplitudes();
    return DensityMatrix(a * a.adjoint());
}

DensityMatrix DensityMatrix::maximally_mixed() {
    return DensityMatrix(0.25 * Matrix4c::Identity());
}

Projector::Projector(const Matrix4c& entries) : m_(entries) {
    if (hermiticity_error(m_) > tol::algebraic)
        throw std::invalid_argument("Projector: not Hermitian");
    if ((m_ * m_ - m_).cwiseAbs().maxCoeff() > tol::algebraic)
        throw std::invalid_argument("Projector: not idempotent");
}

Projector Projector::product(const Eigen::Vector2cd& a, const Eigen::Vector2cd& b) {
    const Eigen::Vector2cd an = a.normalized();
    const Eigen::Vector2cd bn = b.normalized();
    const Eigen::Matrix2cd pa = an * an.adjoint();
    const Eigen::Matrix2cd pb = bn * bn.adjoint();
    Matrix4c p;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            p.block<2, 2>(2 * i, 2 * j) = pa(i, j) * pb;
    return Projector(p);
}

Projector Projector::first_qubit(const Eigen::Vector2cd& a) {
    const Eigen::Vector2cd an = a.normalized();
    const Eigen::Matrix2cd pa = an * an.adjoint();
    Matrix4c p;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            p.block<2, 2>(2 * i, 2 * j) = pa(i, j) * Eigen::Matrix2cd::Identity();
    return Projector(p);
}

Projector Projector::second_qubit(const Eigen::Vector2cd& b) {
    const Eigen::Vector2cd bn = b.normalized();
    const Eigen::Matrix2cd pb = bn * bn.adjoint();
    Matrix4c p = Matrix4c::Zero();
    p.block<2, 2>(0, 0) = pb;
    p.block<2, 2>(2, 2) = pb;
    return Projector(p);
}

namespace qubit {
Eigen::Vector2cd basis0() { return {Complex(1, 0), Complex(0, 0)}; }
Eigen::Vector2cd basis1() { return {Complex(0, 0), Complex(1, 0)}; }
Eigen::Vector2cd diagonal() { return {Complex(M_SQRT1_2, 0), Complex(M_SQRT1_2, 0)}; }
Eigen::Vector2cd antidiagonal() { return {Complex(M_SQRT1_2, 0), Complex(-M_SQRT1_2, 0)}; }
Eigen::Vector2cd right_circular() { return {Complex(M_SQRT1_2, 0), Complex(0, -M_SQRT1_2)}; }
Eigen::Vector2cd left_circular() { return {Complex(M_SQRT1_2, 0), Complex(0, M_SQRT1_2)}; }
Eigen::Vector2cd linear(double theta_rad) {
    return {Complex(std::cos(theta_rad), 0), Complex(std::sin(theta_rad), 0)};
}
}  // namespace qubit

Ket2Q bell_state(BellKind kind, double extra_phase) {
    const Complex phase = std::exp(kI * extra_phase);
    switch (kind) {
        case BellKind::phi_plus:  return Ket2Q(1.0, 0.0, 0.0, phase);
        case BellKind::phi_minus: return Ket2Q(1.0, 0.0, 0.0, -phase);
        case BellKind::psi_plus:  return Ket2Q(0.0, 1.0, phase, 0.0);
        case BellKind::psi_minus: return Ket2Q(0.0, 1.0, -phase, 0.0);
    }
    throw std::invalid_argument("bell_state: unknown kind");
}

DensityMatrix general_pair_state(double eta, double delta) {
    if (!std::isfinite(eta)) throw std::invalid_argument("general_pair_state: eta not finite");
    const Complex a11 = eta * std::exp(kI * delta);
    return Ket2Q(1.0, 0.0, 0.0, a11).projector_state();
}

double born_probability(const DensityMatrix& rho, const Projector& proj) {
    const double p = (rho.entries() * proj.entries()).trace().real();
    if (p < -tol::physicality || p > 1.0 + tol::physicality)
        throw std::runtime_error("born_probability: value outside [0,1]");
    return std::clamp(p, 0.0, 1.0);
}

Matrix4c sqrt_psd(const Matrix4c& m) {
    if (hermiticity_error(m) > 1e-8)
        throw std::invalid_argument("sqrt_psd: matrix not Hermitian");
    Eigen::SelfAdjointEigenSolver<Matrix4c> solver(m);
    Eigen::Vector4d ev = solver.eigenvalues();
    // Eigenvalues at roundoff scale are clamped to exactly zero; otherwise
    // sqrt(~1e-16) noise of order 1e-8 leaks into the trace.
    const double floor_scale = 1e-13 * std::max(ev.cwiseAbs().maxCoeff(), 1e-300);
    for (int i = 0; i < 4; ++i) {
        if (ev(i) < -tol::physicality)
            throw std::runtime_error("sqrt_psd: negative eigenvalue");
        ev(i) = ev(i) > floor_scale ? std::sqrt(ev(i)) : 0.0;
    }
    return solver.eigenvectors() * ev.asDiagonal() * solver.eigenvectors().adjoint();
}

double fidelity(const DensityMatrix& rho_exp, const DensityMatrix& rho_th) {
    const Matrix4c s = sqrt_psd(rho_th.entries());
    const Matrix4c inner = s * rho_exp.entries() * s;
    // inner is PSD up to roundoff; symmetrize before the second square root.
    const Matrix4c root = sqrt_psd(0.5 * (inner + inner.adjoint()));
    const double f = root.trace().real();
    return std::clamp(f * f, 0.0, 1.0);
}

DensityMatrix werner_state(double p, BellKind kind) {
    if (p < 0.0 || p > 1.0) throw std::invalid_argument("werner_state: p outside [0,1]");
    const Matrix4c bell = DensityMatrix::from_ket(bell_state(kind)).entries();
    return DensityMatrix(p * bell + (1.0 - p) * 0.25 * Matrix4c::Identity());
}

}  // namespace epsim
