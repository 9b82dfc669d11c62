#include "twinworld/program.hpp"

#include <algorithm>
#include <numbers>

#include "twinworld/refresh.hpp"

namespace twinworld {

std::vector<int> Program::measured() const {
    std::vector<int> out;
    for (const auto& g : gates)
        if (g.kind == GateKind::Measure)
            for (int t : g.targets)
                if (std::find(out.begin(), out.end(), t) == out.end()) out.push_back(t);
    return out;
}

std::string gate_name(GateKind kind) {
    switch (kind) {
        case GateKind::X: return "X";
        case GateKind::H: return "H";
        case GateKind::Phase: return "Phase";
        case GateKind::Q: return "Q";
        case GateKind::CNOT: return "CNOT";
        case GateKind::ControlledPhase: return "ControlledPhase";
        case GateKind::ControlledQ: return "ControlledQ";
        case GateKind::AmplitudeReduction: return "AmplitudeReduction";
        case GateKind::Refresh: return "Refresh";
        case GateKind::Measure: return "Measure";
    }
    return "?";
}

namespace {

void expect_arity(const GateSpec& g, std::size_t targets, std::size_t controls) {
    if (g.targets.size() != targets || g.controls.size() != controls)
        throw InvalidProgram(gate_name(g.kind) + ": expected " + std::to_string(targets) + " target(s) and " +
                             std::to_string(controls) + " control(s)");
}

}  // namespace

void validate(const Program& program) {
    const int n = program.n_grabits;
    if (n < 1 || n > 12) throw InvalidProgram("register size must be between 1 and 12 grabits");
    if (program.reim && (*program.reim < 0 || *program.reim >= n)) throw InvalidProgram("ReIm grabit outside register");
    for (const auto& g : program.gates) {
        std::vector<int> all = g.targets;
        all.insert(all.end(), g.controls.begin(), g.controls.end());
        for (int q : all)
            if (q < 0 || q >= n) throw InvalidProgram(gate_name(g.kind) + ": operand outside register");
        auto sorted = all;
        std::sort(sorted.begin(), sorted.end());
        if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
            throw InvalidProgram(gate_name(g.kind) + ": targets and controls overlap");
        const bool touches_reim = program.reim && std::find(all.begin(), all.end(), *program.reim) != all.end();
        switch (g.kind) {
            case GateKind::X:
            case GateKind::H:
            case GateKind::Q:
            case GateKind::AmplitudeReduction:
                expect_arity(g, 1, 0);
                if (touches_reim) throw InvalidProgram(gate_name(g.kind) + ": cannot act on the ReIm grabit");
                break;
            case GateKind::Phase:
                expect_arity(g, 1, 0);
                if (!program.reim || g.targets[0] != *program.reim)
                    throw InvalidProgram("Phase must target the ReIm grabit");
                break;
            case GateKind::ControlledPhase:
                expect_arity(g, 1, 1);
                if (!program.reim || g.targets[0] != *program.reim)
                    throw InvalidProgram("ControlledPhase must target the ReIm grabit");
                break;
            case GateKind::CNOT:
            case GateKind::ControlledQ:
                expect_arity(g, 1, 1);
                if (touches_reim) throw InvalidProgram(gate_name(g.kind) + ": cannot act on the ReIm grabit");
                break;
            case GateKind::Refresh:
                expect_arity(g, 0, 0);
                break;
            case GateKind::Measure:
                if (g.targets.empty() || !g.controls.empty()) throw InvalidProgram("Measure needs targets only");
                break;
        }
        if (g.kind == GateKind::AmplitudeReduction && !(g.param >= 0 && g.param <= 0.5))
            throw InvalidProgram("AmplitudeReduction r0 must lie in [0, 1/2]");
    }
}

BoundGate stochastic_gate(const GateSpec& g, const Program& /*program*/) {
    switch (g.kind) {
        case GateKind::X: return {s_x(), g.targets};
        case GateKind::H: return {s_h(), g.targets};
        case GateKind::Q: return {s_q_theta(g.param), g.targets};
        case GateKind::Phase: return {s_r_phi(g.param), g.targets};
        case GateKind::AmplitudeReduction: return {lift_sigma(r2_from_r0(g.param)), g.targets};
        case GateKind::CNOT: return {s_cnot(), {g.controls[0], g.targets[0]}};
        case GateKind::ControlledPhase: return {lift_controlled(s_r_phi(g.param)), {g.controls[0], g.targets[0]}};
        case GateKind::ControlledQ: return {lift_controlled(s_q_theta(g.param)), {g.controls[0], g.targets[0]}};
        case GateKind::Refresh:
        case GateKind::Measure: break;
    }
    throw InvalidGate(gate_name(g.kind) + " has no matrix form");
}

VectorX<double> apply_gate(const VectorX<double>& P, const GateSpec& gate, const Program& program) {
    if (P.size() != (Index{1} << (2 * program.n_grabits))) throw InvalidGate("state does not match register size");
    switch (gate.kind) {
        case GateKind::Refresh: return refresh_circuit(P);
        case GateKind::Measure: return P;
        default: break;
    }
    const BoundGate b = stochastic_gate(gate, program);
    return apply_matrix(P, b.matrix, b.operands);
}

VectorX<double> run_distribution(const Program& program, const VectorX<double>& P0) {
    validate(program);
    VectorX<double> P = P0;
    for (const auto& g : program.gates) P = apply_gate(P, g, program);
    return P;
}

VectorX<double> run_distribution(const Program& program) {
    return run_distribution(program, basis_distribution(Index{1} << (2 * program.n_grabits), 0));
}

Program phase_rotation_program(double phi) {
    Program p;
    p.n_grabits = 3;
    p.reim = 2;
    p.gates = {
        {GateKind::H, {1}, {}},
        {GateKind::ControlledPhase, {2}, {1}, phi},
        {GateKind::H, {0}, {}},
        {GateKind::CNOT, {1}, {0}},
        {GateKind::H, {0}, {}},
        {GateKind::Refresh, {}, {}},
        {GateKind::Measure, {0}, {}},
    };
    return p;
}

Program chsh_program_unrefreshed(double theta1, double theta2) {
    Program p;
    p.n_grabits = 4;
    p.gates = {
        {GateKind::X, {1}, {}},
        {GateKind::H, {1}, {}},
        {GateKind::CNOT, {3}, {1}},
        {GateKind::X, {3}, {}},
        {GateKind::H, {0}, {}},
        {GateKind::H, {2}, {}},
        {GateKind::ControlledQ, {1}, {0}, theta1},
        {GateKind::ControlledQ, {3}, {2}, theta2},
        {GateKind::H, {0}, {}},
        {GateKind::H, {2}, {}},
    };
    return p;
}

Program chsh_program(double theta1, double theta2) {
    Program p = chsh_program_unrefreshed(theta1, theta2);
    p.gates.push_back({GateKind::Refresh, {}, {}});
    p.gates.push_back({GateKind::Measure, {0, 2}, {}});
    return p;
}

std::vector<std::pair<double, double>> chsh_settings(double phi) {
    const double h = std::numbers::pi / 2;
    return {{h, h + phi}, {0.0, h + phi}, {0.0, phi}, {h, phi}};
}

}  // namespace twinworld
