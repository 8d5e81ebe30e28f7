#include "mapgate/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <sstream>

#include "mapgate/errors.hpp"

namespace mapgate {

namespace {

constexpr double kSqrt3 = 1.7320508075688772;

int shape_code(EnvelopeShape s) { return static_cast<int>(s); }
int port_code(DrivePort p) { return static_cast<int>(p); }

CMatrix single_qubit_rotation(Axis axis, double angle) {
  const double c = std::cos(0.5 * angle);
  const double s = std::sin(0.5 * angle);
  CMatrix r(2, 2);
  if (axis == Axis::X) {
    r << c, -kI * s, -kI * s, c;
  } else {
    r << c, -s, s, c;
  }
  return r;
}

}  // namespace

RotatingFrameHamiltonian to_rotating_frame(const OperatorMatrix& h_static, double frame_q1, double frame_q2) {
  const auto& space = h_static.space;
  return {h_static.entries - frame_q1 * space.number1() - frame_q2 * space.number2(), frame_q1 - frame_q2};
}

struct Simulator::Piece {
  enum class Kind { Constant, TimeDependent, Instant };
  Kind kind = Kind::Constant;
  double begin = 0.0;
  double end = 0.0;
  double frame = 0.0;
  CMatrix h;
  std::function<CMatrix(double)> h_at;
  CMatrix instant;
  std::optional<std::tuple<int, int, double, double, double, double, double, double, double>> cache_key;
};

namespace {

using HamiltonianPath = std::function<CMatrix(double)>;

CVector superdiag(const CVector& g) {
  const auto n = g.size();
  CVector d(n * n);
  for (Eigen::Index col = 0; col < n; ++col) {
    for (Eigen::Index row = 0; row < n; ++row) d(row + n * col) = g(row) * std::conj(g(col));
  }
  return d;
}

CMatrix superop_of(const CMatrix& u) { return kron(u.conjugate(), u); }

CMatrix dissipator_of(const std::vector<CMatrix>& collapse, Eigen::Index n) {
  const CMatrix id = CMatrix::Identity(n, n);
  CMatrix d = CMatrix::Zero(n * n, n * n);
  for (const auto& c : collapse) {
    const CMatrix cdc = c.adjoint() * c;
    d += kron(c.conjugate(), c) - 0.5 * kron(id, cdc) - 0.5 * kron(cdc.transpose(), id);
  }
  return d;
}

}  // namespace

class PieceIntegrator {
 public:
  PieceIntegrator(const Simulator& sim, bool open) : sim_(sim), open_(open), n_(sim.space().dim()) {}

  /// Propagator (unitary, or superoperator when open) of the portion [a, b]
  /// of `piece`, in the qubit frame.
  CMatrix propagate(const Simulator::Piece& piece, double a, double b) {
    using Kind = Simulator::Piece::Kind;
    if (piece.kind == Kind::Instant) return open_ ? superop_of(piece.instant) : piece.instant;
    CMatrix op;
    if (piece.kind == Kind::Constant) {
      op = open_ ? expm((liouvillian(piece.h) * (b - a)).eval()) : expm_hermitian(piece.h, b - a);
    } else if (piece.cache_key && a == piece.begin && b == piece.end) {
      auto key = *piece.cache_key;
      std::get<0>(key) = open_ ? 1 : 0;
      {
        std::lock_guard lock(sim_.cache_mutex_);
        auto it = sim_.ramp_cache_.find(key);
        if (it != sim_.ramp_cache_.end()) op = it->second;
      }
      if (op.size() == 0) {
        op = integrate(piece.h_at, a, b);
        std::lock_guard lock(sim_.cache_mutex_);
        sim_.ramp_cache_.emplace(key, op);
      }
    } else {
      op = integrate(piece.h_at, a, b);
    }
    const CVector g1 = sim_.frame_phases(piece.frame, b);
    const CVector g0 = sim_.frame_phases(piece.frame, a);
    if (open_) {
      op = superdiag(g1).asDiagonal() * op * superdiag(g0).conjugate().asDiagonal();
    } else {
      op = g1.asDiagonal() * op * g0.conjugate().asDiagonal();
    }
    return op;
  }

  std::size_t steps() const { return steps_; }
  double max_error() const { return max_error_; }

 private:
  CMatrix liouvillian(const CMatrix& h) const {
    const CMatrix id = CMatrix::Identity(n_, n_);
    return -kI * (kron(id, h) - kron(h.transpose(), id)) + sim_.dissipator_;
  }

  static CMatrix magnus(const HamiltonianPath& h_at, double x, double y) {
    const double step = y - x;
    const double mid = 0.5 * (x + y);
    const double offset = kSqrt3 / 6.0 * step;
    const CMatrix h1 = h_at(mid - offset);
    const CMatrix h2 = h_at(mid + offset);
    CMatrix k = 0.5 * step * (h1 + h2) - kI * (kSqrt3 / 12.0) * step * step * (h2 * h1 - h1 * h2);
    k = 0.5 * (k + k.adjoint()).eval();
    return expm_hermitian(k, 1.0);
  }

  [[noreturn]] void fail(double err, double tol) const {
    std::ostringstream msg;
    msg << "integration tolerance " << tol << " not met within " << sim_.options().max_steps
        << " steps (local error " << err << ")";
    throw NumericalError(msg.str());
  }

  /// Unitary over [a, b] by fourth-order Magnus steps under step doubling.
  CMatrix unitary(const HamiltonianPath& h_at, double a, double b) {
    const double span = b - a;
    const auto initial = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::ceil(span / sim_.options().initial_step - 1e-9)));
    CMatrix result = CMatrix::Identity(n_, n_);
    budget_steps_ = 0;
    for (std::size_t k = 0; k < initial; ++k) {
      const double x = a + span * static_cast<double>(k) / static_cast<double>(initial);
      const double y = (k + 1 == initial) ? b : a + span * static_cast<double>(k + 1) / static_cast<double>(initial);
      result = adapt(h_at, x, y, magnus(h_at, x, y), span) * result;
    }
    return result;
  }

  CMatrix adapt(const HamiltonianPath& h_at, double x, double y, const CMatrix& full, double span) {
    const double mid = 0.5 * (x + y);
    CMatrix first = magnus(h_at, x, mid);
    CMatrix second = magnus(h_at, mid, y);
    CMatrix half = second * first;
    const double err = max_abs(full - half);
    const double tol = sim_.options().tolerance;
    if (err <= tol * (y - x) / span) {
      steps_ += 2;
      budget_steps_ += 2;
      max_error_ = std::max(max_error_, err);
      return half;
    }
    if (budget_steps_ >= sim_.options().max_steps) fail(err, tol);
    budget_steps_ += 1;
    CMatrix left = adapt(h_at, x, mid, first, span);
    CMatrix right = adapt(h_at, mid, y, second, span);
    return right * left;
  }

  /// Superoperator over [x, y]: the coherent propagator U composed with the
  /// exponential of the dissipator integrated in the interaction picture of
  /// U (Simpson rule, panels refined until the embedded coarse rule agrees).
  CMatrix open_chunk(const HamiltonianPath& h_at, double x, double y) {
    const auto& collapse = sim_.collapse_;
    const double tol = sim_.options().open_tolerance;
    auto panels = std::max<std::size_t>(
        4, 4 * static_cast<std::size_t>(std::ceil((y - x) / (4.0 * sim_.options().open_quadrature_step))));
    while (true) {
      const double h = (y - x) / static_cast<double>(panels);
      CMatrix u = CMatrix::Identity(n_, n_);
      // Jump terms conj(c)(x)c accumulate blockwise; the anticommutator part
      // is linear in sum c^dag c and is lifted to superoperator form once.
      CMatrix jump_fine = CMatrix::Zero(n_ * n_, n_ * n_);
      CMatrix jump_coarse = CMatrix::Zero(n_ * n_, n_ * n_);
      CMatrix loss_fine = CMatrix::Zero(n_, n_);
      CMatrix loss_coarse = CMatrix::Zero(n_, n_);
      CMatrix rotated(n_, n_);
      for (std::size_t k = 0; k <= panels; ++k) {
        const double t = x + h * static_cast<double>(k);
        if (k > 0) u = unitary(h_at, t - h, t) * u;
        const bool edge = k == 0 || k == panels;
        const double wf = (edge ? 1.0 : (k % 2 == 1 ? 4.0 : 2.0)) * h / 3.0;
        const double wc = (k % 2 == 0) ? (edge ? 1.0 : (k % 4 == 2 ? 4.0 : 2.0)) * 2.0 * h / 3.0 : 0.0;
        for (const auto& c : collapse) {
          rotated.noalias() = u.adjoint() * c * u;
          const CMatrix loss = rotated.adjoint() * rotated;
          loss_fine += wf * loss;
          if (wc != 0.0) loss_coarse += wc * loss;
          for (Eigen::Index col = 0; col < n_; ++col) {
            for (Eigen::Index row = 0; row < n_; ++row) {
              const Complex z = std::conj(rotated(row, col));
              if (z == Complex(0.0)) continue;
              jump_fine.block(row * n_, col * n_, n_, n_) += (wf * z) * rotated;
              if (wc != 0.0) jump_coarse.block(row * n_, col * n_, n_, n_) += (wc * z) * rotated;
            }
          }
        }
      }
      const CMatrix id = CMatrix::Identity(n_, n_);
      auto lift = [&](const CMatrix& jump, const CMatrix& loss) -> CMatrix {
        return jump - 0.5 * kron(id, loss) - 0.5 * kron(loss.transpose(), id);
      };
      const CMatrix fine = lift(jump_fine, loss_fine);
      const double err = max_abs(fine - lift(jump_coarse, loss_coarse)) / 15.0;
      if (err <= tol) {
        max_error_ = std::max(max_error_, err);
        steps_ += panels;
        return superop_of(u) * expm(fine);
      }
      if (2 * panels > sim_.options().max_steps) fail(err, tol);
      panels *= 2;
    }
  }

  CMatrix open_adapt(const HamiltonianPath& h_at, double x, double y, const CMatrix& full, double span) {
    const double mid = 0.5 * (x + y);
    CMatrix first = open_chunk(h_at, x, mid);
    CMatrix second = open_chunk(h_at, mid, y);
    CMatrix half = second * first;
    const double err = max_abs(full - half);
    const double tol = sim_.options().open_tolerance;
    if (err <= tol * (y - x) / span || (y - x) <= sim_.options().open_min_chunk) {
      max_error_ = std::max(max_error_, err);
      return half;
    }
    CMatrix left = open_adapt(h_at, x, mid, first, span);
    CMatrix right = open_adapt(h_at, mid, y, second, span);
    return right * left;
  }

  CMatrix integrate(const HamiltonianPath& h_at, double a, double b) {
    if (!open_) return unitary(h_at, a, b);
    const double span = b - a;
    const auto chunks = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::ceil(span / sim_.options().open_chunk - 1e-9)));
    CMatrix result = CMatrix::Identity(n_ * n_, n_ * n_);
    for (std::size_t k = 0; k < chunks; ++k) {
      const double x = a + span * static_cast<double>(k) / static_cast<double>(chunks);
      const double y = (k + 1 == chunks) ? b : a + span * static_cast<double>(k + 1) / static_cast<double>(chunks);
      result = open_adapt(h_at, x, y, open_chunk(h_at, x, y), span) * result;
    }
    return result;
  }

  const Simulator& sim_;
  bool open_;
  Eigen::Index n_;
  std::size_t steps_ = 0;
  std::size_t budget_steps_ = 0;
  double max_error_ = 0.0;
};

Simulator::Simulator(const DeviceParams& params, SimulatorOptions options)
    : params_(params),
      options_(options),
      hamiltonian_(build_static_hamiltonian(params, options.max_dimension)),
      frame_(dressed_qubit_frequencies(params)) {
  number_total_ = space().number1() + space().number2();
  const auto n = space().dim();
  if (params_.coherence) {
    const auto& c = *params_.coherence;
    auto channel = [&](const CMatrix& a, const CMatrix& num, double t1, double t2) {
      collapse_.push_back(std::sqrt(1.0 / t1) * a);
      const double dephasing = 1.0 / t2 - 0.5 / t1;
      if (dephasing > 0.0) collapse_.push_back(std::sqrt(2.0 * dephasing) * num);
    };
    channel(space().lowering1(), space().number1(), c.t1_q1, c.t2_q1);
    channel(space().lowering2(), space().number2(), c.t1_q2, c.t2_q2);
  }
  dissipator_ = dissipator_of(collapse_, n);
}

CVector Simulator::basis_state(const Ket& k) const {
  CVector v = CVector::Zero(space().dim());
  v(space().index(k)) = 1.0;
  return v;
}

CMatrix Simulator::drive_operator(DrivePort port) const {
  switch (port) {
    case DrivePort::Q1: return space().lowering1();
    case DrivePort::Q2: return space().lowering2();
    case DrivePort::Both: return space().lowering1() + space().lowering2();
  }
  return space().lowering2();
}

CMatrix Simulator::rotation_unitary(const Rotation& r) const {
  const CMatrix r2 = single_qubit_rotation(r.axis, r.angle);
  auto lift = [](const CMatrix& q, int levels) {
    CMatrix u = CMatrix::Identity(levels, levels);
    u.topLeftCorner(2, 2) = q;
    return u;
  };
  const int d1 = space().levels1();
  const int d2 = space().levels2();
  const bool on1 = r.target != Target::Q2;
  const bool on2 = r.target != Target::Q1;
  const CMatrix u1 = on1 ? lift(r2, d1) : CMatrix::Identity(d1, d1);
  const CMatrix u2 = on2 ? lift(r2, d2) : CMatrix::Identity(d2, d2);
  return kron(u1, u2);
}

CMatrix Simulator::embed(const Eigen::Matrix4cd& u) const {
  CMatrix full = space().identity();
  const auto idx = space().computational_indices();
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) full(idx[i], idx[j]) = u(i, j);
  }
  return full;
}

CMatrix Simulator::driven_hamiltonian(double omega_d, double amplitude, DrivePort port, double phase) const {
  const CMatrix a = drive_operator(port);
  const Complex e = std::exp(-kI * phase);
  return hamiltonian_.entries - omega_d * number_total_ +
         0.5 * amplitude * (e * a.adjoint() + std::conj(e) * a);
}

CVector Simulator::frame_phases(double frame, double t) const {
  const auto n = space().dim();
  CVector g(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Ket k = space().ket(i);
    const double angle = ((frame_.q1 - frame) * k.q1 + (frame_.q2 - frame) * k.q2) * t;
    g(i) = std::exp(kI * angle);
  }
  return g;
}

std::vector<Simulator::Piece> Simulator::pieces(const PulseSequence& seq) const {
  std::vector<Piece> out;
  double t = 0.0;
  const CMatrix& h = hamiltonian_.entries;

  auto idle = [&](double duration) {
    if (duration <= 0.0) return;
    Piece p;
    p.kind = Piece::Kind::Constant;
    p.begin = t;
    p.end = t + duration;
    p.frame = frame_.q2;
    p.h = h - frame_.q2 * number_total_;
    out.push_back(std::move(p));
    t += duration;
  };
  auto instant = [&](CMatrix w) {
    Piece p;
    p.kind = Piece::Kind::Instant;
    p.begin = p.end = t;
    p.instant = std::move(w);
    out.push_back(std::move(p));
  };

  for (const auto& segment : seq.segments()) {
    if (const auto* pulse = std::get_if<DrivePulse>(&segment)) {
      pulse->validate();
      if (pulse->duration <= 0.0) continue;
      const double start = t;
      const double f = pulse->omega_d;
      const CMatrix h0 = h - f * number_total_;
      const CMatrix a = drive_operator(pulse->port);
      const Complex e = std::exp(-kI * pulse->phase);
      const CMatrix v = 0.5 * pulse->amplitude * (e * a.adjoint() + std::conj(e) * a);
      const DrivePulse shape = *pulse;
      auto add = [&](double rel_begin, double rel_end, bool constant, double key_begin, double key_end) {
        if (rel_end - rel_begin <= 0.0) return;
        Piece p;
        p.begin = start + rel_begin;
        p.end = start + rel_end;
        p.frame = f;
        if (constant) {
          p.kind = Piece::Kind::Constant;
          p.h = h0 + v;
        } else {
          p.kind = Piece::Kind::TimeDependent;
          p.h_at = [h0, v, shape, start](double time) -> CMatrix { return h0 + shape.envelope(time - start) * v; };
          p.cache_key = std::make_tuple(0, port_code(shape.port), static_cast<double>(shape_code(shape.shape)),
                                        shape.omega_d, shape.amplitude, shape.phase, shape.rise_fall, key_begin,
                                        key_end);
        }
        out.push_back(std::move(p));
      };
      const double d = pulse->duration;
      switch (pulse->shape) {
        case EnvelopeShape::Square:
          add(0.0, d, true, 0.0, 0.0);
          break;
        case EnvelopeShape::FlatTop: {
          const double r = pulse->rise_fall;
          if (r <= 0.0) {
            add(0.0, d, true, 0.0, 0.0);
          } else {
            add(0.0, r, false, 0.0, r);
            add(r, d - r, true, 0.0, 0.0);
            add(d - r, d, false, -r, 0.0);  // keyed relative to the pulse end
          }
          break;
        }
        case EnvelopeShape::Gaussian:
          add(0.0, d, false, 0.0, d);
          break;
      }
      t = start + d;
    } else if (const auto* rot = std::get_if<Rotation>(&segment)) {
      if (options_.rotation_mode == RotationMode::Ideal || rot->gate_length <= 0.0) {
        idle(0.5 * rot->gate_length);
        instant(rotation_unitary(*rot));
        idle(0.5 * rot->gate_length);
        continue;
      }
      struct Tone {
        CMatrix a;
        double omega;
        double amplitude;
        double phase;
      };
      std::vector<Tone> tones;
      const double rate = std::abs(rot->angle) / rot->gate_length;
      const double phase = (rot->axis == Axis::X ? 0.0 : -0.5 * std::numbers::pi) +
                           (rot->angle < 0.0 ? std::numbers::pi : 0.0);
      if (rot->target != Target::Q2) tones.push_back({space().lowering1(), frame_.q1, rate, phase});
      if (rot->target != Target::Q1) tones.push_back({space().lowering2(), frame_.q2, rate, phase});
      const double f = rot->target == Target::Q1 ? frame_.q1 : frame_.q2;
      const CMatrix h0 = h - f * number_total_;
      Piece p;
      p.begin = t;
      p.end = t + rot->gate_length;
      p.frame = f;
      const bool constant = tones.size() == 1;
      if (constant) {
        const auto& tone = tones.front();
        const Complex e = std::exp(-kI * tone.phase);
        p.kind = Piece::Kind::Constant;
        p.h = h0 + 0.5 * tone.amplitude * (e * tone.a.adjoint() + std::conj(e) * tone.a);
      } else {
        p.kind = Piece::Kind::TimeDependent;
        p.h_at = [h0, tones, f](double time) -> CMatrix {
          CMatrix out = h0;
          for (const auto& tone : tones) {
            const Complex e = std::exp(-kI * ((tone.omega - f) * time + tone.phase));
            out += 0.5 * tone.amplitude * (e * tone.a.adjoint() + std::conj(e) * tone.a);
          }
          return out;
        };
      }
      out.push_back(std::move(p));
      t += rot->gate_length;
    } else if (const auto* wait = std::get_if<Idle>(&segment)) {
      if (wait->duration < 0.0) throw ConfigError("idle duration must be >= 0");
      idle(wait->duration);
    } else if (const auto* gate = std::get_if<QubitGate>(&segment)) {
      instant(embed(gate->unitary));
    }
  }
  return out;
}

std::array<double, 4> Simulator::computational_populations(const CVector& psi) const {
  const auto idx = space().computational_indices();
  return {std::norm(psi(idx[0])), std::norm(psi(idx[1])), std::norm(psi(idx[2])), std::norm(psi(idx[3]))};
}

std::array<double, 4> Simulator::computational_populations(const CMatrix& rho) const {
  const auto idx = space().computational_indices();
  return {rho(idx[0], idx[0]).real(), rho(idx[1], idx[1]).real(), rho(idx[2], idx[2]).real(),
          rho(idx[3], idx[3]).real()};
}

namespace {

template <class State>
PopulationSample sample_of(const Simulator& sim, double t, const State& s, double total) {
  PopulationSample out;
  out.time = t;
  out.computational = sim.computational_populations(s);
  double sum = 0.0;
  for (double p : out.computational) sum += p;
  out.leakage = std::max(0.0, total - sum);
  return out;
}

std::vector<double> chunk_edges(double begin, double end, double interval) {
  std::vector<double> edges{begin};
  if (interval > 0.0 && end > begin) {
    const auto n = static_cast<std::size_t>(std::ceil((end - begin) / interval - 1e-9));
    for (std::size_t k = 1; k < n; ++k) edges.push_back(begin + interval * static_cast<double>(k));
  }
  edges.push_back(end);
  return edges;
}

}  // namespace

PropagationResult Simulator::propagate_unitary(const PulseSequence& seq) const {
  PieceIntegrator integrator(*this, false);
  CMatrix u = space().identity();
  for (const auto& piece : pieces(seq)) u = integrator.propagate(piece, piece.begin, piece.end) * u;
  PropagationResult result;
  result.diagnostics.steps = integrator.steps();
  result.diagnostics.max_step_error = integrator.max_error();
  result.diagnostics.unitarity_error = unitarity_error(u);
  result.propagator = std::move(u);
  return result;
}

PropagationResult Simulator::evolve(const CVector& psi0, const PulseSequence& seq, double sample_interval) const {
  PieceIntegrator integrator(*this, false);
  CVector psi = psi0;
  const double norm0 = psi0.squaredNorm();
  PropagationResult result;
  const bool record = sample_interval > 0.0;
  if (record) result.samples.push_back(sample_of(*this, 0.0, psi, norm0));
  for (const auto& piece : pieces(seq)) {
    if (piece.kind == Piece::Kind::Instant) {
      psi = piece.instant * psi;
      continue;
    }
    const auto edges = chunk_edges(piece.begin, piece.end, record ? sample_interval : 0.0);
    for (std::size_t k = 0; k + 1 < edges.size(); ++k) {
      psi = integrator.propagate(piece, edges[k], edges[k + 1]) * psi;
      if (record) result.samples.push_back(sample_of(*this, edges[k + 1], psi, norm0));
    }
  }
  result.diagnostics.steps = integrator.steps();
  result.diagnostics.max_step_error = integrator.max_error();
  result.diagnostics.norm_drift = std::abs(psi.squaredNorm() - norm0);
  result.state = std::move(psi);
  return result;
}

CMatrix Simulator::dissipator() const { return dissipator_; }

PropagationResult Simulator::propagate_lindblad(const PulseSequence& seq) const {
  if (!params_.coherence) throw ConfigError("open-system propagation requires T1/T2 for both transmons");
  params_.validate(false, true);
  const auto n = space().dim();
  PieceIntegrator integrator(*this, true);
  CMatrix s = CMatrix::Identity(n * n, n * n);
  for (const auto& piece : pieces(seq)) s = integrator.propagate(piece, piece.begin, piece.end) * s;
  PropagationResult result;
  result.diagnostics.steps = integrator.steps();
  result.diagnostics.max_step_error = integrator.max_error();
  const CVector trace_row = vec(space().identity());
  result.diagnostics.trace_drift = max_abs((trace_row.transpose() * s - trace_row.transpose()).eval());
  result.propagator = std::move(s);
  return result;
}

PropagationResult Simulator::evolve_lindblad(const CMatrix& rho0, const PulseSequence& seq,
                                             double sample_interval) const {
  if (!params_.coherence) throw ConfigError("open-system propagation requires T1/T2 for both transmons");
  params_.validate(false, true);
  const auto n = space().dim();
  PieceIntegrator integrator(*this, true);
  CVector r = vec(rho0);
  const double trace0 = rho0.trace().real();
  PropagationResult result;
  const bool record = sample_interval > 0.0;
  if (record) result.samples.push_back(sample_of(*this, 0.0, rho0, trace0));
  for (const auto& piece : pieces(seq)) {
    if (piece.kind == Piece::Kind::Instant) {
      const CMatrix rho = unvec(r, n);
      r = vec(piece.instant * rho * piece.instant.adjoint());
      continue;
    }
    const auto edges = chunk_edges(piece.begin, piece.end, record ? sample_interval : 0.0);
    for (std::size_t k = 0; k + 1 < edges.size(); ++k) {
      r = integrator.propagate(piece, edges[k], edges[k + 1]) * r;
      if (record) result.samples.push_back(sample_of(*this, edges[k + 1], unvec(r, n), trace0));
    }
  }
  CMatrix rho = unvec(r, n);
  result.diagnostics.steps = integrator.steps();
  result.diagnostics.max_step_error = integrator.max_error();
  result.diagnostics.trace_drift = std::abs(rho.trace().real() - trace0);
  const CMatrix herm = 0.5 * (rho + rho.adjoint());
  result.diagnostics.min_eigenvalue = Eigen::SelfAdjointEigenSolver<CMatrix>(herm).eigenvalues().minCoeff();
  result.density = std::move(rho);
  return result;
}

CVector Simulator::evolve_lab_frame(const CVector& psi0, const DrivePulse& pulse, double dt) const {
  pulse.validate();
  const double f = pulse.omega_d;
  const CMatrix h0 = hamiltonian_.entries - f * number_total_;
  const CMatrix a = drive_operator(pulse.port);
  const CMatrix ad = a.adjoint();
  auto rhs = [&](double t, const CVector& psi) -> CVector {
    const double coeff = pulse.amplitude * pulse.envelope(t) * std::cos(f * t + pulse.phase);
    const Complex rot = std::exp(-kI * f * t);
    CVector out = h0 * psi + coeff * (rot * (a * psi) + std::conj(rot) * (ad * psi));
    return -kI * out;
  };
  const auto steps = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(pulse.duration / dt)));
  const double h = pulse.duration / static_cast<double>(steps);
  CVector psi = psi0;
  for (std::size_t k = 0; k < steps; ++k) {
    const double t = h * static_cast<double>(k);
    const CVector k1 = rhs(t, psi);
    const CVector k2 = rhs(t + 0.5 * h, psi + 0.5 * h * k1);
    const CVector k3 = rhs(t + 0.5 * h, psi + 0.5 * h * k2);
    const CVector k4 = rhs(t + h, psi + h * k3);
    psi += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return frame_phases(f, pulse.duration).asDiagonal() * psi;
}

DrivenDressedEnergies driven_dressed_energies(const DeviceParams& params, double omega_d, double amplitude,
                                              const ContinuationOptions& options) {
  const auto h = build_static_hamiltonian(params);
  const auto& space = h.space;
  const CMatrix number = space.number1() + space.number2();
  CMatrix a = space.lowering2();
  if (options.port == DrivePort::Q1) a = space.lowering1();
  if (options.port == DrivePort::Both) a = space.lowering1() + space.lowering2();
  const CMatrix h0 = h.entries - omega_d * number;
  const CMatrix v = 0.5 * (a + a.adjoint());
  const auto labels = space.computational_indices();

  const auto undriven = dressed_spectrum(OperatorMatrix{space, h0});
  std::array<CVector, 4> tracked;
  std::array<double, 4> energy{};
  for (std::size_t k = 0; k < 4; ++k) {
    const auto d = undriven.dressed_of_bare[static_cast<std::size_t>(labels[k])];
    tracked[k] = undriven.vectors.col(d);
    energy[k] = undriven.energies(d);
  }

  DrivenDressedEnergies out;
  double current = 0.0;
  double step = std::min(options.max_step, amplitude);
  while (current < amplitude) {
    const double next = std::min(amplitude, current + step);
    Eigen::SelfAdjointEigenSolver<CMatrix> solver(h0 + next * v);
    std::array<Eigen::Index, 4> best{};
    std::array<double, 4> overlap{};
    bool ok = true;
    for (std::size_t k = 0; k < 4 && ok; ++k) {
      const RVector ov = (solver.eigenvectors().adjoint() * tracked[k]).cwiseAbs2();
      overlap[k] = ov.maxCoeff(&best[k]);
      if (overlap[k] <= 0.5) ok = false;
      for (std::size_t j = 0; j < k && ok; ++j) ok = best[j] != best[k];
    }
    if (!ok) {
      step *= 0.5;
      if (step < options.min_step) {
        std::ostringstream msg;
        msg << "dressed-state labeling ambiguous at drive " << units::to_ghz(omega_d) << " GHz, amplitude "
            << units::to_mhz(next) << " MHz: leakage region";
        throw LeakageRegionError(msg.str(), omega_d, next);
      }
      continue;
    }
    for (std::size_t k = 0; k < 4; ++k) {
      tracked[k] = solver.eigenvectors().col(best[k]);
      energy[k] = solver.eigenvalues()(best[k]);
      out.min_overlap = std::min(out.min_overlap, overlap[k]);
    }
    ++out.continuation_steps;
    current = next;
    step = std::min(options.max_step, 2.0 * step);
  }
  for (const auto& vecd : tracked) {
    double inside = 0.0;
    for (auto i : labels) inside += std::norm(vecd(i));
    out.non_computational_weight = std::max(out.non_computational_weight, 1.0 - inside);
  }
  out.e00 = energy[0];
  out.e01 = energy[1];
  out.e10 = energy[2];
  out.e11 = energy[3];
  out.zeta = out.e11 - out.e01 - out.e10 + out.e00;
  return out;
}

}  // namespace mapgate
