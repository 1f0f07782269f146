// Two-qubit state algebra: kets, density matrices, projectors, Born
// probabilities, fidelity and physicality checks.
//
// Basis order is fixed globally as (00, 01, 10, 11). Polarization maps
// H -> 0, V -> 1; time bins map S -> 0, L -> 1. Basis labels are caller
// semantics only; the algebra never depends on them.

#pragma once

#include <Eigen/Dense>

#include <complex>
#include <string>
#include <vector>

namespace epsim {

using Complex = std::complex<double>;
using Matrix4c = Eigen::Matrix4cd;
using Vector4c = Eigen::Vector4cd;

// A 4x4 complex matrix with no invariants attached. Linear tomography
// returns these: Hermitian and unit trace, but possibly not positive.
using RawMatrix = Matrix4c;

// Centralized tolerances.
namespace tol {
inline constexpr double physicality = 1e-9;   // eigenvalue floor
inline constexpr double algebraic = 1e-10;    // Hermiticity / trace / P^2=P
}  // namespace tol

/// Normalized two-qubit ket. Construction normalizes; throws on zero vector.
class Ket2Q {
  public:
    explicit Ket2Q(const Vector4c& amplitudes);
    Ket2Q(Complex a00, Complex a01, Complex a10, Complex a11);

    const Vector4c& amplitudes() const { return amp_; }
    Complex operator[](int i) const { return amp_(i); }

    /// |psi><psi| as a density matrix.
    class DensityMatrix projector_state() const;

  private:
    Vector4c amp_;
};

struct PhysicalityReport {
    bool hermitian = false;
    bool unit_trace = false;
    bool positive = false;
    double hermiticity_error = 0.0;
    double trace_real = 0.0;
    double trace_imag = 0.0;
    double min_eigenvalue = 0.0;
    bool ok() const { return hermitian && unit_trace && positive; }
    std::vector<std::string> violations() const;
};

/// Check Hermiticity (1e-10), unit trace (1e-10) and min eigenvalue >= -1e-9.
PhysicalityReport is_physical(const RawMatrix& m);

/// Physical two-qubit density matrix. Construction validates the invariants.
class DensityMatrix {
  public:
    explicit DensityMatrix(const Matrix4c& entries);

    const Matrix4c& entries() const { return m_; }
    Complex operator()(int i, int j) const { return m_(i, j); }

    double purity() const { return (m_ * m_).trace().real(); }

    static DensityMatrix from_ket(const Ket2Q& psi);
    static DensityMatrix maximally_mixed();

  private:
    Matrix4c m_;
};

/// Idempotent Hermitian measurement operator (rank 1 or 2).
class Projector {
  public:
    explicit Projector(const Matrix4c& entries);

    const Matrix4c& entries() const { return m_; }

    /// |a><a| (x) |b><b| from two single-qubit kets.
    static Projector product(const Eigen::Vector2cd& a, const Eigen::Vector2cd& b);
    /// Rank-2 projector |a><a| (x) I on the first qubit.
    static Projector first_qubit(const Eigen::Vector2cd& a);
    /// Rank-2 projector I (x) |b><b| on the second qubit.
    static Projector second_qubit(const Eigen::Vector2cd& b);

  private:
    Matrix4c m_;
};

// Single-qubit kets in the fixed basis.
namespace qubit {
Eigen::Vector2cd basis0();                  // H or S
Eigen::Vector2cd basis1();                  // V or L
Eigen::Vector2cd diagonal();                // (|0> + |1>)/sqrt2
Eigen::Vector2cd antidiagonal();            // (|0> - |1>)/sqrt2
Eigen::Vector2cd right_circular();          // (|0> - i|1>)/sqrt2
Eigen::Vector2cd left_circular();           // (|0> + i|1>)/sqrt2
Eigen::Vector2cd linear(double theta_rad);  // cos t |0> + sin t |1>
}  // namespace qubit

enum class BellKind { phi_plus, phi_minus, psi_plus, psi_minus };

/// (|00> +- e^{i phi}|11>)/sqrt2 or (|01> +- e^{i phi}|10>)/sqrt2.
Ket2Q bell_state(BellKind kind, double extra_phase = 0.0);

/// Pure state (|00> + eta e^{i delta}|11>)/sqrt(1 + eta^2) as a density matrix.
DensityMatrix general_pair_state(double eta, double delta);

/// Tr(rho P), clamped to [0, 1]. Throws if P is not within [-1e-9, 1+1e-9].
double born_probability(const DensityMatrix& rho, const Projector& proj);

/// Uhlmann fidelity F = [Tr sqrt(sqrt(rho_th) rho_exp sqrt(rho_th))]^2.
double fidelity(const DensityMatrix& rho_exp, const DensityMatrix& rho_th);

/// Matrix square root of a Hermitian PSD matrix by eigendecomposition.
/// Eigenvalues below -1e-9 throw; small negatives are clamped to zero.
Matrix4c sqrt_psd(const Matrix4c& m);

/// p |bell><bell| + (1-p) I/4. Fidelity to the Bell state is (1+3p)/4.
DensityMatrix werner_state(double p, BellKind kind = BellKind::phi_plus);

}  // namespace epsim
