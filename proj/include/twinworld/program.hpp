#pragma once

#include <optional>
#include <string>
#include <vector>

#include "twinworld/core_state.hpp"
#include "twinworld/gates.hpp"

namespace twinworld {

enum class GateKind { X, H, Phase, Q, CNOT, ControlledPhase, ControlledQ, AmplitudeReduction, Refresh, Measure };

/// One instruction of a grabit circuit.
///
/// Operand conventions:
///   X, H, Q(theta), AmplitudeReduction(r0): targets = {t}
///   Phase(phi): targets = {reim}, global factor exp(i*phi)
///   ControlledPhase(phi): controls = {c}, targets = {reim}
///   CNOT, ControlledQ(theta): controls = {c}, targets = {t}
///   Refresh: no operands
///   Measure: targets = grabits whose blv is reported
struct GateSpec {
    GateKind kind;
    std::vector<int> targets;
    std::vector<int> controls;
    double param = 0;
};

struct Program {
    int n_grabits = 1;
    /// Position of the ReIm grabit, absent for circuits that stay real.
    std::optional<int> reim;
    std::vector<GateSpec> gates;

    /// Measured grabits in the order their Measure instructions list them.
    std::vector<int> measured() const;
};

std::string gate_name(GateKind kind);

/// Throws InvalidProgram on out-of-range or overlapping operands, or on a
/// missing ReIm grabit for phase gates.
void validate(const Program& program);

/// Stochastic matrix of a gate together with the grabits it acts on, the
/// first operand being most significant in the matrix index.
struct BoundGate {
    MatrixX<double> matrix;
    std::vector<int> operands;
};

/// Matrix form of a gate. Refresh and Measure have none and throw InvalidGate.
BoundGate stochastic_gate(const GateSpec& gate, const Program& program);

VectorX<double> apply_gate(const VectorX<double>& P, const GateSpec& gate, const Program& program);

/// Exact distribution after running the program from the all-zero b4v string.
VectorX<double> run_distribution(const Program& program);
VectorX<double> run_distribution(const Program& program, const VectorX<double>& P0);

// Built-in circuits

/// Interference circuit for a relative phase: ancilla 0, qubit 1, ReIm 2.
/// Outcome-0 probability of the ancilla is (1 + cos phi) / 2.
Program phase_rotation_program(double phi);

/// Singlet on qubits 1 and 3 with Hadamard-test ancillas 0 and 2 measuring
/// Q(theta1) and Q(theta2).
Program chsh_program(double theta1, double theta2);

/// The same circuit without the final refresh and measurement.
Program chsh_program_unrefreshed(double theta1, double theta2);

/// (theta1, theta2) for the four correlators QS, RS, RT, QT at parameter phi.
std::vector<std::pair<double, double>> chsh_settings(double phi);

}  // namespace twinworld
