#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mapgate/dynamics.hpp"
#include "mapgate/pulses.hpp"

namespace mapgate {

using Matrix4c = Eigen::Matrix4cd;
using Matrix16c = Eigen::Matrix<std::complex<double>, 16, 16>;
using Vector16 = Eigen::Matrix<double, 16, 1>;

/// Two-qubit Pauli transfer matrix R_ij = Tr(P_i L(P_j)) / 4 over the basis
/// II, IX, IY, IZ, XI, ..., ZZ (Q1 slot first; index 4 a + b for sigma_a x sigma_b).
using Ptm = Eigen::Matrix<double, 16, 16>;

const std::array<std::string, 16>& pauli_labels();
/// sigma_a (Q1) x sigma_b (Q2) for index 4 a + b, in the |q1 q2> basis ordered 00, 01, 10, 11.
const Matrix4c& pauli(int index);

/// Pauli coordinates p_i = Tr(P_i rho); rho = sum_i p_i P_i / 4.
Vector16 pauli_vector(const Matrix4c& rho);
Matrix4c from_pauli_vector(const Vector16& p);

Ptm ptm_of_unitary(const Matrix4c& u);
/// Composition L2 after L1.
inline Ptm compose(const Ptm& r2, const Ptm& r1) { return r2 * r1; }

/// Choi matrix sum_kl |k><l| (x) L(|k><l|) / 4, input factor first, unit
/// trace. Trace preservation reads Tr_out(C) = I / 4.
Matrix16c choi_from_ptm(const Ptm& r);
Ptm ptm_from_choi(const Matrix16c& choi);
/// Partial trace over the output factor.
Matrix4c choi_input_marginal(const Matrix16c& choi);

struct InputState {
  std::string label;  ///< e.g. "X90,Ym90": Q1 preparation, Q2 preparation
  Matrix4c prep;      ///< prep unitary applied to |00>
  Matrix4c rho;
};

/// All pairs from {I, X_pi, X_pi/2, X_-pi/2, Y_pi/2, Y_-pi/2} on Q1 and Q2, Q1 major.
std::vector<InputState> prepare_input_states();

/// Restricts a transmon-space density matrix to the qubit subspace.
struct QubitProjection {
  Matrix4c rho;          ///< renormalised to unit trace
  double leakage = 0.0;  ///< population outside the qubit subspace
};

QubitProjection project_to_qubits(const TwoTransmonSpace& space, const CMatrix& rho);

struct StateEstimate {
  Matrix4c rho;
  Vector16 expectations;  ///< <P_i>, with <II> = 1
  double leakage = 0.0;
  std::optional<std::string> warning;
};

struct TomographyOptions {
  /// Binomial sampling of each Pauli expectation; exact when unset.
  std::optional<std::uint64_t> shots;
  std::uint64_t seed = 0;
  double leakage_warning = 0.05;
};

/// Linear-inversion state tomography from the 15 Pauli expectations.
/// `stream` separates the random streams of different calls.
StateEstimate state_tomography(const Matrix4c& rho, const TomographyOptions& options = {}, double leakage = 0.0,
                               std::uint64_t stream = 0);

/// Least-squares R with p_out = R p_in over all input/output pairs. Throws
/// NumericalError naming the Pauli directions missing from the inputs.
Ptm ptm_linear_inversion(const std::vector<Matrix4c>& inputs, const std::vector<Matrix4c>& outputs);

struct ProjectionResult {
  Ptm ptm;
  Matrix16c choi;
  double eta = 0.0;  ///< sum of negative eigenvalues of the input Choi matrix
  std::size_t iterations = 0;
  double increment = 0.0;
};

struct ProjectionOptions {
  double tolerance = 1e-9;        ///< Frobenius increment between sweeps
  std::size_t max_iterations = 200000;
  double eigen_floor = 1e-12;     ///< eigenvalues above -floor count as zero in eta
};

/// Dykstra alternating projections of the Choi matrix onto the PSD cone and
/// the trace-preserving affine subspace (Frobenius metric).
ProjectionResult physicality_projection(const Ptm& raw, const ProjectionOptions& options = {});

/// Average gate fidelity (Tr(R_ideal^T R) + 4) / 20.
double average_gate_fidelity(const Ptm& r, const Ptm& ideal);
/// Process fidelity Tr(R_ideal^T R) / 16.
double process_fidelity(const Ptm& r, const Ptm& ideal);

/// (X x X) exp(i sign pi/4 Z x Z). The sign of the conditional phase
/// follows the sign of the calibrated rate: sign = -1 for zeta > 0.
Matrix4c ideal_zz_pi(int sign, bool with_xx = true);

struct QptOptions {
  TomographyOptions tomography;
  ProjectionOptions projection;
  /// Lindblad propagation when the device has coherence times.
  bool open_system = true;
  std::size_t workers = 1;
};

struct ProcessResult {
  Ptm r_raw;
  Ptm r_phys;
  Matrix16c choi_raw;
  Matrix16c choi;
  double eta = 0.0;
  double f_raw = 0.0;      ///< average gate fidelity before projection
  double f_proj = 0.0;     ///< after projection
  double f_pro_raw = 0.0;  ///< process fidelity before projection
  double f_pro_proj = 0.0;
  double max_leakage = 0.0;
  double mean_leakage = 0.0;
  bool open_system = false;
  std::size_t projection_iterations = 0;
  std::vector<std::string> warnings;
  std::vector<InputState> inputs;
  std::vector<StateEstimate> outputs;
};

/// Prepares the 36 inputs with ideal rotations, applies `gate`, runs state
/// tomography on the qubit subspace, inverts, projects and scores against
/// `target`.
ProcessResult qpt_pipeline(const Simulator& sim, const PulseSequence& gate, const Matrix4c& target,
                           const QptOptions& options = {});

}  // namespace mapgate
