#include "twinworld/oracle.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/Eigenvalues>

namespace twinworld {

MatrixX<Complex> gate_x() {
    MatrixX<Complex> U(2, 2);
    U << 0, 1, 1, 0;
    return U;
}

MatrixX<Complex> gate_h() { return gate_q(std::numbers::pi / 4); }

MatrixX<Complex> gate_q(double theta) {
    MatrixX<Complex> U(2, 2);
    U << std::sin(theta), std::cos(theta), std::cos(theta), -std::sin(theta);
    return U;
}

MatrixX<Complex> gate_phase(double phi) {
    MatrixX<Complex> U = MatrixX<Complex>::Identity(2, 2);
    U(1, 1) = std::polar(1.0, phi);
    return U;
}

MatrixX<Complex> controlled(const MatrixX<Complex>& U) {
    const Index d = U.rows();
    MatrixX<Complex> C = MatrixX<Complex>::Identity(2 * d, 2 * d);
    C.bottomRightCorner(d, d) = U;
    return C;
}

MatrixX<Complex> gate_cnot() { return controlled(gate_x()); }

int qubit_of(const Program& program, int grabit) {
    if (program.reim && grabit == *program.reim) return -1;
    return program.reim && grabit > *program.reim ? grabit - 1 : grabit;
}

UnitaryProgram to_unitary_program(const Program& program) {
    validate(program);
    UnitaryProgram u;
    u.n_qubits = program.n_grabits - (program.reim ? 1 : 0);
    if (u.n_qubits < 1) throw InvalidProgram("program has no qubits besides the ReIm grabit");
    auto q = [&](int g) { return qubit_of(program, g); };
    for (const auto& g : program.gates) {
        switch (g.kind) {
            case GateKind::X: u.gates.push_back({gate_x(), {q(g.targets[0])}}); break;
            case GateKind::H: u.gates.push_back({gate_h(), {q(g.targets[0])}}); break;
            case GateKind::Q: u.gates.push_back({gate_q(g.param), {q(g.targets[0])}}); break;
            case GateKind::CNOT: u.gates.push_back({gate_cnot(), {q(g.controls[0]), q(g.targets[0])}}); break;
            case GateKind::ControlledQ:
                u.gates.push_back({controlled(gate_q(g.param)), {q(g.controls[0]), q(g.targets[0])}});
                break;
            case GateKind::ControlledPhase: u.gates.push_back({gate_phase(g.param), {q(g.controls[0])}}); break;
            case GateKind::Phase: {
                MatrixX<Complex> U = MatrixX<Complex>::Identity(2, 2) * std::polar(1.0, g.param);
                u.gates.push_back({U, {0}});
                break;
            }
            case GateKind::Measure:
                for (int t : g.targets) {
                    if (q(t) < 0) throw InvalidProgram("the ReIm grabit cannot be measured");
                    u.measured.push_back(q(t));
                }
                break;
            case GateKind::AmplitudeReduction:
            case GateKind::Refresh: break;
        }
    }
    return u;
}

namespace {

int bit_of(Index i, int n, int q) { return static_cast<int>((i >> (n - 1 - q)) & 1); }

void apply_unitary(VectorX<Complex>& psi, int n, const UnitaryGate& g) {
    const int k = static_cast<int>(g.qubits.size());
    const Index d = Index{1} << k;
    if (g.U.rows() != d || g.U.cols() != d) throw InvalidGate("unitary does not match its qubit count");
    for (int q : g.qubits)
        if (q < 0 || q >= n) throw InvalidGate("qubit outside register");
    Index mask = 0;
    for (int q : g.qubits) mask |= Index{1} << (n - 1 - q);
    std::vector<Index> idx(d);
    VectorX<Complex> sub(d);
    for (Index base = 0; base < psi.size(); ++base) {
        if (base & mask) continue;
        for (Index s = 0; s < d; ++s) {
            Index i = base;
            for (int a = 0; a < k; ++a)
                if ((s >> (k - 1 - a)) & 1) i |= Index{1} << (n - 1 - g.qubits[a]);
            idx[s] = i;
            sub(s) = psi(i);
        }
        const VectorX<Complex> out = g.U * sub;
        for (Index s = 0; s < d; ++s) psi(idx[s]) = out(s);
    }
}

}  // namespace

VectorX<Complex> simulate_circuit(const UnitaryProgram& program, const VectorX<Complex>& psi0) {
    if (psi0.size() != (Index{1} << program.n_qubits)) throw InvalidGate("initial state does not match register");
    VectorX<Complex> psi = psi0;
    for (const auto& g : program.gates) apply_unitary(psi, program.n_qubits, g);
    return psi;
}

VectorX<Complex> simulate_circuit(const UnitaryProgram& program) {
    return simulate_circuit(program, VectorX<Complex>::Unit(Index{1} << program.n_qubits, 0));
}

VectorX<double> outcome_distribution(const VectorX<Complex>& psi, int n_qubits, const std::vector<int>& measured) {
    const int m = static_cast<int>(measured.size());
    VectorX<double> p = VectorX<double>::Zero(Index{1} << m);
    for (Index i = 0; i < psi.size(); ++i) {
        Index o = 0;
        for (int q : measured) o = 2 * o + bit_of(i, n_qubits, q);
        p(o) += std::norm(psi(i));
    }
    return p;
}

VectorX<double> oracle_outcomes(const Program& program) {
    const UnitaryProgram u = to_unitary_program(program);
    return outcome_distribution(simulate_circuit(u), u.n_qubits, u.measured);
}

VectorX<Complex> singlet() {
    VectorX<Complex> s = VectorX<Complex>::Zero(4);
    s(1) = 1 / std::sqrt(2.0);
    s(2) = -1 / std::sqrt(2.0);
    return s;
}

double chsh_correlator(double theta1, double theta2) {
    MatrixX<Complex> A = gate_q(theta1);
    MatrixX<Complex> B = gate_q(theta2);
    MatrixX<Complex> AB(4, 4);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) AB.block(2 * i, 2 * j, 2, 2) = A(i, j) * B;
    const VectorX<Complex> s = singlet();
    return std::real(s.dot(AB * s));
}

double chsh_expectation(double phi) {
    std::vector<double> e;
    for (auto [t1, t2] : chsh_settings(phi)) e.push_back(chsh_correlator(t1, t2));
    return chsh_combination(e);
}

MatrixX<double> lattice_hamiltonian(const LatticeSpec& spec, const VectorX<double>& W) {
    spec.validate();
    validate_potential(spec, W);
    MatrixX<double> H = -MatrixX<double>(neighbor_sum(spec));
    H.diagonal().array() += 2.0 * spec.D * spec.M;
    H.diagonal() += W;
    return H;
}

MatrixX<double> euler_step_matrix(const MatrixX<double>& H, double dt) {
    const Index n = H.rows();
    MatrixX<double> U = MatrixX<double>::Identity(2 * n, 2 * n);
    U.topRightCorner(n, n) = dt * H;
    U.bottomLeftCorner(n, n) = -dt * H;
    return U;
}

LatticeOracle::LatticeOracle(const LatticeSpec& spec, const VectorX<double>& W) : H_(lattice_hamiltonian(spec, W)) {
    Eigen::SelfAdjointEigenSolver<MatrixX<double>> es(H_);
    if (es.info() != Eigen::Success) throw Error("eigendecomposition of the lattice Hamiltonian failed");
    evals_ = es.eigenvalues();
    evecs_ = es.eigenvectors();
}

VectorX<Complex> LatticeOracle::evolve(const VectorX<Complex>& psi0, double t) const {
    if (psi0.size() != H_.rows()) throw InvalidDistribution("state does not match lattice");
    VectorX<Complex> c = evecs_.transpose().cast<Complex>() * psi0;
    for (Index k = 0; k < c.size(); ++k) c(k) *= std::polar(1.0, -evals_(k) * t);
    return evecs_.cast<Complex>() * c;
}

VectorX<double> LatticeOracle::realified(const VectorX<Complex>& psi0, double t) const {
    return realify(evolve(psi0, t), ReImLayout::Major);
}

VectorX<double> LatticeOracle::euler(const VectorX<Complex>& psi0, double dt, Index n_steps) const {
    const MatrixX<double> U = euler_step_matrix(H_, dt);
    VectorX<double> phi = realify(psi0, ReImLayout::Major);
    VectorX<double> next(phi.size());
    for (Index k = 0; k < n_steps; ++k) {
        next.noalias() = U * phi;
        phi = next;
    }
    return phi;
}

VectorX<double> exact_schrodinger_step(const VectorX<double>& Phi, const LatticeSpec& spec, const VectorX<double>& W,
                                       double dt, OracleStepping mode) {
    if (mode == OracleStepping::Euler) return euler_step_matrix(lattice_hamiltonian(spec, W), dt) * Phi;
    return LatticeOracle(spec, W).realified(complexify(Phi, ReImLayout::Major), dt);
}

VectorX<double> density(const VectorX<double>& phi) {
    const Index n = phi.size() / 2;
    return phi.head(n).cwiseAbs2() + phi.tail(n).cwiseAbs2();
}

double position_variance(const VectorX<double>& phi) {
    const VectorX<double> p = normalize(density(phi), Norm::One);
    const VectorX<double> x = VectorX<double>::LinSpaced(p.size(), 0.0, static_cast<double>(p.size() - 1));
    const double mean = p.dot(x);
    return p.dot((x.array() - mean).square().matrix());
}

GaugeAlignment align_gauge(const VectorX<double>& Phi_exact, const VectorX<double>& phi_emulated) {
    if (Phi_exact.size() != phi_emulated.size()) throw InvalidDistribution("states differ in dimension");
    const VectorX<Complex> a = complexify(Phi_exact, ReImLayout::Major);
    const VectorX<Complex> b = complexify(phi_emulated, ReImLayout::Major);
    const Complex overlap = b.dot(a);  // <b|a>
    const double angle = std::abs(overlap) > 0 ? std::arg(overlap) : 0.0;
    return {realify(VectorX<Complex>(b * std::polar(1.0, angle)), ReImLayout::Major), angle};
}

double compare(const VectorX<double>& Phi_exact, const VectorX<double>& phi_emulated, Metric metric,
               double density_floor) {
    if (Phi_exact.size() != phi_emulated.size()) throw InvalidDistribution("states differ in dimension");
    const VectorX<double> phi = normalize(phi_emulated, Norm::Two);
    switch (metric) {
        case Metric::TwoNormDiff: return (Phi_exact - phi).norm();
        case Metric::Variance: return std::abs(position_variance(Phi_exact) - position_variance(phi));
        case Metric::Log10DensityDiff: {
            const VectorX<double> pe = density(Phi_exact);
            const VectorX<double> pm = density(phi);
            double gap = 0;
            for (Index x = 0; x < pe.size(); ++x) {
                if (!(pe(x) > density_floor)) continue;
                if (!(pm(x) > 0)) return std::numeric_limits<double>::infinity();
                gap = std::max(gap, std::abs(std::log10(pe(x)) - std::log10(pm(x))));
            }
            return gap;
        }
    }
    return 0;
}

}  // namespace twinworld
