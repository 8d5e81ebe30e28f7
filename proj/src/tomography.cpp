#include "mapgate/tomography.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include <unsupported/Eigen/KroneckerProduct>

#include "mapgate/errors.hpp"
#include "mapgate/parallel.hpp"

namespace mapgate {
namespace {

using Matrix2c = Eigen::Matrix2cd;

const std::array<Matrix2c, 4>& single_paulis() {
  static const std::array<Matrix2c, 4> s = [] {
    std::array<Matrix2c, 4> out;
    out[0] << 1, 0, 0, 1;
    out[1] << 0, 1, 1, 0;
    out[2] << 0, Complex(0, -1), Complex(0, 1), 0;
    out[3] << 1, 0, 0, -1;
    return out;
  }();
  return s;
}

Matrix2c rotation2(Axis axis, double angle) {
  const double c = std::cos(0.5 * angle);
  const double s = std::sin(0.5 * angle);
  Matrix2c r;
  if (axis == Axis::X) {
    r << c, Complex(0, -s), Complex(0, -s), c;
  } else {
    r << c, -s, s, c;
  }
  return r;
}

Matrix16c kron16(const Matrix4c& a, const Matrix4c& b) {
  Matrix16c out = Eigen::kroneckerProduct(a, b);
  return out;
}

Matrix16c psd_part(const Matrix16c& m) {
  const Matrix16c h = 0.5 * (m + m.adjoint());
  Eigen::SelfAdjointEigenSolver<Matrix16c> es(h);
  const Eigen::Matrix<double, 16, 1> values = es.eigenvalues().cwiseMax(0.0);
  return es.eigenvectors() * values.asDiagonal() * es.eigenvectors().adjoint();
}

Matrix16c tp_part(const Matrix16c& m) {
  const Matrix4c excess = choi_input_marginal(m) - 0.25 * Matrix4c::Identity();
  return m - kron16(excess, 0.25 * Matrix4c::Identity());
}

}  // namespace

const std::array<std::string, 16>& pauli_labels() {
  static const std::array<std::string, 16> labels = [] {
    const char names[] = {'I', 'X', 'Y', 'Z'};
    std::array<std::string, 16> out;
    for (int a = 0; a < 4; ++a) {
      for (int b = 0; b < 4; ++b) out[4 * a + b] = std::string{names[a], names[b]};
    }
    return out;
  }();
  return labels;
}

const Matrix4c& pauli(int index) {
  static const std::array<Matrix4c, 16> table = [] {
    std::array<Matrix4c, 16> out;
    const auto& s = single_paulis();
    for (int a = 0; a < 4; ++a) {
      for (int b = 0; b < 4; ++b) out[4 * a + b] = Eigen::kroneckerProduct(s[a], s[b]);
    }
    return out;
  }();
  if (index < 0 || index >= 16) throw ConfigError("Pauli index out of range");
  return table[static_cast<std::size_t>(index)];
}

Vector16 pauli_vector(const Matrix4c& rho) {
  Vector16 p;
  for (int i = 0; i < 16; ++i) p(i) = (pauli(i) * rho).trace().real();
  return p;
}

Matrix4c from_pauli_vector(const Vector16& p) {
  Matrix4c rho = Matrix4c::Zero();
  for (int i = 0; i < 16; ++i) rho += 0.25 * p(i) * pauli(i);
  return rho;
}

Ptm ptm_of_unitary(const Matrix4c& u) {
  Ptm r;
  for (int j = 0; j < 16; ++j) {
    const Matrix4c image = u * pauli(j) * u.adjoint();
    for (int i = 0; i < 16; ++i) r(i, j) = 0.25 * (pauli(i) * image).trace().real();
  }
  return r;
}

Matrix16c choi_from_ptm(const Ptm& r) {
  Matrix16c c = Matrix16c::Zero();
  for (int i = 0; i < 16; ++i) {
    for (int j = 0; j < 16; ++j) {
      if (r(i, j) == 0.0) continue;
      c += (r(i, j) / 16.0) * kron16(pauli(j).transpose(), pauli(i));
    }
  }
  return c;
}

Ptm ptm_from_choi(const Matrix16c& choi) {
  Ptm r;
  for (int i = 0; i < 16; ++i) {
    for (int j = 0; j < 16; ++j) r(i, j) = (choi * kron16(pauli(j).transpose(), pauli(i))).trace().real();
  }
  return r;
}

Matrix4c choi_input_marginal(const Matrix16c& choi) {
  Matrix4c out;
  for (int a = 0; a < 4; ++a) {
    for (int b = 0; b < 4; ++b) out(a, b) = choi.block<4, 4>(4 * a, 4 * b).trace();
  }
  return out;
}

std::vector<InputState> prepare_input_states() {
  struct Prep {
    const char* name;
    Matrix2c u;
  };
  const double pi = std::numbers::pi;
  const std::array<Prep, 6> preps = {{
      {"I", Matrix2c::Identity()},
      {"X180", rotation2(Axis::X, pi)},
      {"X90", rotation2(Axis::X, 0.5 * pi)},
      {"Xm90", rotation2(Axis::X, -0.5 * pi)},
      {"Y90", rotation2(Axis::Y, 0.5 * pi)},
      {"Ym90", rotation2(Axis::Y, -0.5 * pi)},
  }};
  Matrix4c ground = Matrix4c::Zero();
  ground(0, 0) = 1.0;
  std::vector<InputState> out;
  for (const auto& p1 : preps) {
    for (const auto& p2 : preps) {
      InputState s;
      s.label = std::string(p1.name) + "," + p2.name;
      s.prep = Eigen::kroneckerProduct(p1.u, p2.u);
      s.rho = s.prep * ground * s.prep.adjoint();
      out.push_back(std::move(s));
    }
  }
  return out;
}

QubitProjection project_to_qubits(const TwoTransmonSpace& space, const CMatrix& rho) {
  const auto idx = space.computational_indices();
  QubitProjection out;
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) out.rho(i, j) = rho(idx[i], idx[j]);
  }
  const double inside = out.rho.trace().real();
  out.leakage = std::max(0.0, rho.trace().real() - inside);
  if (!(inside > 0.0)) throw NumericalError("no population left in the qubit subspace");
  out.rho /= inside;
  return out;
}

StateEstimate state_tomography(const Matrix4c& rho, const TomographyOptions& options, double leakage,
                               std::uint64_t stream) {
  if (options.shots && *options.shots == 0) throw ConfigError("shot count must be positive");
  if (std::abs(rho.trace().real() - 1.0) > 1e-6) throw ConfigError("state tomography needs a unit-trace state");
  StateEstimate est;
  est.leakage = leakage;
  if (leakage > options.leakage_warning) {
    std::ostringstream msg;
    msg << "leakage " << leakage << " exceeds " << options.leakage_warning
        << "; tomography used the renormalised qubit subspace";
    est.warning = msg.str();
  }
  est.expectations = pauli_vector(rho);
  if (options.shots) {
    std::seed_seq seq{options.seed, stream};
    std::mt19937_64 rng(seq);
    for (int i = 1; i < 16; ++i) {
      const double plus = std::clamp(0.5 * (1.0 + est.expectations(i)), 0.0, 1.0);
      std::binomial_distribution<std::uint64_t> dist(*options.shots, plus);
      est.expectations(i) = 2.0 * static_cast<double>(dist(rng)) / static_cast<double>(*options.shots) - 1.0;
    }
  }
  est.expectations(0) = 1.0;
  est.rho = from_pauli_vector(est.expectations);
  return est;
}

Ptm ptm_linear_inversion(const std::vector<Matrix4c>& inputs, const std::vector<Matrix4c>& outputs) {
  if (inputs.size() != outputs.size() || inputs.empty()) {
    throw ConfigError("PTM inversion needs matching, nonempty input and output lists");
  }
  const Eigen::Index m = static_cast<Eigen::Index>(inputs.size());
  Eigen::MatrixXd pin(16, m), pout(16, m);
  for (Eigen::Index k = 0; k < m; ++k) {
    pin.col(k) = pauli_vector(inputs[static_cast<std::size_t>(k)]);
    pout.col(k) = pauli_vector(outputs[static_cast<std::size_t>(k)]);
  }
  const Eigen::MatrixXd gram = pin * pin.transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
  const double cutoff = 1e-10 * std::max(1.0, es.eigenvalues().maxCoeff());
  std::vector<std::string> missing;
  for (Eigen::Index k = 0; k < 16; ++k) {
    if (es.eigenvalues()(k) > cutoff) continue;
    Eigen::Index top = 0;
    es.eigenvectors().col(k).cwiseAbs().maxCoeff(&top);
    missing.push_back(pauli_labels()[static_cast<std::size_t>(top)]);
  }
  if (!missing.empty()) {
    std::ostringstream msg;
    msg << "input states span rank " << 16 - missing.size() << " < 16; missing directions dominated by:";
    for (const auto& l : missing) msg << ' ' << l;
    throw NumericalError(msg.str());
  }
  const Eigen::MatrixXd r = gram.ldlt().solve(pin * pout.transpose()).transpose();
  return Ptm(r);
}

ProjectionResult physicality_projection(const Ptm& raw, const ProjectionOptions& options) {
  ProjectionResult out;
  const Matrix16c c0 = choi_from_ptm(raw);
  const Matrix16c h0 = 0.5 * (c0 + c0.adjoint());
  const auto values = Eigen::SelfAdjointEigenSolver<Matrix16c>(h0).eigenvalues();
  for (int k = 0; k < 16; ++k) {
    if (values(k) < -options.eigen_floor) out.eta += values(k);
  }

  // Dykstra iteration with a correction term per set.
  Matrix16c x = h0;
  Matrix16c p = Matrix16c::Zero();
  Matrix16c q = Matrix16c::Zero();
  for (std::size_t it = 1; it <= options.max_iterations; ++it) {
    const Matrix16c y = psd_part(x + p);
    p = x + p - y;
    const Matrix16c next = tp_part(y + q);
    q = y + q - next;
    out.increment = (next - x).norm();
    x = next;
    out.iterations = it;
    if (out.increment < options.tolerance) {
      out.choi = x;
      out.ptm = ptm_from_choi(x);
      return out;
    }
  }
  std::ostringstream msg;
  msg << "CPTP projection did not converge in " << options.max_iterations << " sweeps (last increment "
      << out.increment << ")";
  throw NumericalError(msg.str());
}

double average_gate_fidelity(const Ptm& r, const Ptm& ideal) {
  return ((ideal.transpose() * r).trace() + 4.0) / 20.0;
}

double process_fidelity(const Ptm& r, const Ptm& ideal) { return (ideal.transpose() * r).trace() / 16.0; }

Matrix4c ideal_zz_pi(int sign, bool with_xx) {
  if (sign != 1 && sign != -1) throw ConfigError("conditional-phase sign must be +1 or -1");
  const double quarter = 0.25 * std::numbers::pi * sign;
  Matrix4c zz = Matrix4c::Zero();
  const std::array<double, 4> parity = {1.0, -1.0, -1.0, 1.0};
  for (int k = 0; k < 4; ++k) zz(k, k) = std::exp(Complex(0.0, quarter * parity[static_cast<std::size_t>(k)]));
  return with_xx ? Matrix4c(pauli(5) * zz) : zz;
}

ProcessResult qpt_pipeline(const Simulator& sim, const PulseSequence& gate, const Matrix4c& target,
                           const QptOptions& options) {
  ProcessResult res;
  res.inputs = prepare_input_states();
  res.open_system = options.open_system && sim.params().coherence.has_value();
  const auto& space = sim.space();
  const auto n = space.dim();

  CMatrix channel;
  if (res.open_system) {
    channel = *sim.propagate_lindblad(gate).propagator;
  } else {
    channel = *sim.propagate_unitary(gate).propagator;
  }

  const std::size_t count = res.inputs.size();
  res.outputs.resize(count);
  parallel_for(count, options.workers, [&](std::size_t k) {
    CVector psi = CVector::Zero(n);
    const auto idx = space.computational_indices();
    const CVector prepared = res.inputs[k].prep.col(0);
    for (int i = 0; i < 4; ++i) psi(idx[i]) = prepared(i);
    CMatrix rho;
    if (res.open_system) {
      rho = unvec(channel * vec(psi * psi.adjoint()), n);
    } else {
      const CVector out = channel * psi;
      rho = out * out.adjoint();
    }
    const QubitProjection proj = project_to_qubits(space, rho);
    res.outputs[k] = state_tomography(proj.rho, options.tomography, proj.leakage, k);
  });

  std::vector<Matrix4c> ins, outs;
  for (std::size_t k = 0; k < count; ++k) {
    ins.push_back(res.inputs[k].rho);
    outs.push_back(res.outputs[k].rho);
    res.max_leakage = std::max(res.max_leakage, res.outputs[k].leakage);
    res.mean_leakage += res.outputs[k].leakage / static_cast<double>(count);
    if (res.outputs[k].warning) res.warnings.push_back(res.inputs[k].label + ": " + *res.outputs[k].warning);
  }
  res.r_raw = ptm_linear_inversion(ins, outs);
  res.choi_raw = choi_from_ptm(res.r_raw);
  const ProjectionResult proj = physicality_projection(res.r_raw, options.projection);
  res.r_phys = proj.ptm;
  res.choi = proj.choi;
  res.eta = proj.eta;
  res.projection_iterations = proj.iterations;
  const Ptm ideal = ptm_of_unitary(target);
  res.f_raw = average_gate_fidelity(res.r_raw, ideal);
  res.f_proj = average_gate_fidelity(res.r_phys, ideal);
  res.f_pro_raw = process_fidelity(res.r_raw, ideal);
  res.f_pro_proj = process_fidelity(res.r_phys, ideal);
  return res;
}

}  // namespace mapgate
