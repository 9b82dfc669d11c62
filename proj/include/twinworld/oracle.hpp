#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "twinworld/core_state.hpp"
#include "twinworld/dynamics.hpp"
#include "twinworld/program.hpp"

namespace twinworld {

using Complex = std::complex<double>;

struct UnitaryGate {
    MatrixX<Complex> U;
    /// Qubits acted on, first is most significant in U's index.
    std::vector<int> qubits;
};

/// Plain state-vector circuit on n_qubits, qubit 0 most significant.
struct UnitaryProgram {
    int n_qubits = 1;
    std::vector<UnitaryGate> gates;
    /// Qubits reported by the circuit's measurements.
    std::vector<int> measured;
};

/// Complex counterpart of a grabit program. The ReIm grabit is dropped,
/// phase gates become complex phases, and refresh, measurement and amplitude
/// reduction (which only rescale the state) become no-ops.
UnitaryProgram to_unitary_program(const Program& program);

/// Qubit index of a grabit in the unitary program (-1 for the ReIm grabit).
int qubit_of(const Program& program, int grabit);

VectorX<Complex> simulate_circuit(const UnitaryProgram& program, const VectorX<Complex>& psi0);
VectorX<Complex> simulate_circuit(const UnitaryProgram& program);

/// |psi|^2 summed over unmeasured qubits, indexed by the measured qubits big-endian.
VectorX<double> outcome_distribution(const VectorX<Complex>& psi, int n_qubits, const std::vector<int>& measured);

/// Born-rule outcome distribution of the program's measured grabits.
VectorX<double> oracle_outcomes(const Program& program);

// Standard gates
MatrixX<Complex> gate_x();
MatrixX<Complex> gate_h();
MatrixX<Complex> gate_q(double theta);
MatrixX<Complex> gate_phase(double phi);
MatrixX<Complex> gate_cnot();
/// |0><0| (x) 1 + |1><1| (x) U
MatrixX<Complex> controlled(const MatrixX<Complex>& U);

/// (|01> - |10>) / sqrt(2)
VectorX<Complex> singlet();

/// <Q(theta1) (x) Q(theta2)> in the singlet.
double chsh_correlator(double theta1, double theta2);

/// QS + RS + RT - QT at parameter phi.
double chsh_expectation(double phi);

/// Combination of four correlators in the order QS, RS, RT, QT.
inline double chsh_combination(const std::vector<double>& e) { return e[0] + e[1] + e[2] - e[3]; }

// Lattice reference

/// H = 2*D*M - sum O1 + W, the lattice Hamiltonian in units hbar^2/(2m).
MatrixX<double> lattice_hamiltonian(const LatticeSpec& spec, const VectorX<double>& W);

/// Real first-order step 1 + dt*[[0, H], [-H, 0]] on (Re, Im) blocks.
MatrixX<double> euler_step_matrix(const MatrixX<double>& H, double dt);

enum class OracleStepping { Euler, Exponential };

/// Exact evolution exp(-iHt) through the eigenbasis of H.
class LatticeOracle {
public:
    LatticeOracle(const LatticeSpec& spec, const VectorX<double>& W);

    VectorX<Complex> evolve(const VectorX<Complex>& psi0, double t) const;
    /// Realified state (Major layout) at time t.
    VectorX<double> realified(const VectorX<Complex>& psi0, double t) const;
    /// Realified state after n first-order steps of size dt.
    VectorX<double> euler(const VectorX<Complex>& psi0, double dt, Index n_steps) const;

    const MatrixX<double>& hamiltonian() const { return H_; }
    const VectorX<double>& energies() const { return evals_; }

private:
    MatrixX<double> H_;
    VectorX<double> evals_;
    MatrixX<double> evecs_;
};

/// One oracle step of the realified state.
VectorX<double> exact_schrodinger_step(const VectorX<double>& Phi, const LatticeSpec& spec, const VectorX<double>& W,
                                       double dt, OracleStepping mode = OracleStepping::Exponential);

// Comparison

enum class Metric { TwoNormDiff, Log10DensityDiff, Variance };

/// Density per site, sum over rho of the squared realified components.
VectorX<double> density(const VectorX<double>& phi);

/// Variance of the position distribution with positions 0..N-1.
double position_variance(const VectorX<double>& phi);

/// Global phase applied to the emulated state to maximize its overlap with
/// the reference. Returns the rotated state and the angle.
struct GaugeAlignment {
    VectorX<double> phi;
    double angle;
};
GaugeAlignment align_gauge(const VectorX<double>& Phi_exact, const VectorX<double>& phi_emulated);

/// Emulated state is normalized to unit 2-norm before the metric. No gauge
/// alignment happens here. Log10DensityDiff is the largest |log10 p_exact -
/// log10 p_emulated| over sites where p_exact exceeds density_floor.
double compare(const VectorX<double>& Phi_exact, const VectorX<double>& phi_emulated, Metric metric,
               double density_floor = 1e-20);

}  // namespace twinworld
