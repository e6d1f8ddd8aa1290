#include "nssafe/tape.hpp"

#include <cassert>
#include <cmath>

namespace nssafe {

double s_relu(double a) { return a > 0 ? a : 0.0; }

double s_sigmoid(double a) {
    // Stable on both tails: exp underflows to 0, never overflows to NaN.
    if (a >= 0) {
        return 1.0 / (1.0 + std::exp(-a));
    }
    double e = std::exp(a);
    return e / (1.0 + e);
}

double s_clamp01(double a) { return a < 0 ? 0.0 : (a > 1 ? 1.0 : a); }

double s_log(double a) {
    if (!(a > 0)) throw DomainError("log of non-positive value");
    return std::log(a);
}

double s_sqrt(double a) {
    if (a < 0) throw DomainError("sqrt of negative value");
    return std::sqrt(a);
}

NodeHandle Tape::emit(OpKind op, std::uint32_t a, std::uint32_t b, double val) {
    if (!std::isfinite(val)) throw NumericError("non-finite value on tape");
    nodes_.push_back(Node{op, a, b, val});
    return NodeHandle{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

NodeHandle Tape::constant(double v) { return emit(OpKind::constant, 0, 0, v); }

NodeHandle Tape::unary(OpKind op, NodeHandle x) {
    assert(x.index < nodes_.size());
    double a = nodes_[x.index].val;
    double v = 0;
    switch (op) {
        case OpKind::neg: v = -a; break;
        case OpKind::relu: v = s_relu(a); break;
        case OpKind::sigmoid: v = s_sigmoid(a); break;
        case OpKind::abs: v = s_abs(a); break;
        case OpKind::clamp01: v = s_clamp01(a); break;
        case OpKind::log: v = s_log(a); break;
        case OpKind::sqrt: v = s_sqrt(a); break;
        case OpKind::detach: v = a; break;
        default: throw DomainError("unary applied to non-unary op");
    }
    return emit(op, x.index, 0, v);
}

NodeHandle Tape::binary(OpKind op, NodeHandle x, NodeHandle y) {
    assert(x.index < nodes_.size() && y.index < nodes_.size());
    double a = nodes_[x.index].val;
    double b = nodes_[y.index].val;
    double v = 0;
    switch (op) {
        case OpKind::add: v = a + b; break;
        case OpKind::sub: v = a - b; break;
        case OpKind::mul: v = a * b; break;
        case OpKind::div: v = s_div(a, b); break;
        case OpKind::min: v = s_min(a, b); break;
        case OpKind::max: v = s_max(a, b); break;
        default: throw DomainError("binary applied to non-binary op");
    }
    return emit(op, x.index, y.index, v);
}

NodeHandle apply(Tape& tape, OpKind op, std::span<const NodeHandle> operands, double payload) {
    switch (op) {
        case OpKind::constant:
            if (!operands.empty()) throw ArityError("const takes no operands");
            return tape.constant(payload);
        case OpKind::add:
        case OpKind::sub:
        case OpKind::mul:
        case OpKind::div:
        case OpKind::min:
        case OpKind::max:
            if (operands.size() != 2) throw ArityError("binary op needs 2 operands");
            return tape.binary(op, operands[0], operands[1]);
        default:
            if (operands.size() != 1) throw ArityError("unary op needs 1 operand");
            return tape.unary(op, operands[0]);
    }
}

std::vector<double> Tape::adjoints(NodeHandle output) const {
    assert(output.index < nodes_.size());
    std::vector<double> adj(output.index + 1, 0.0);
    adj[output.index] = 1.0;
    for (std::uint32_t i = output.index + 1; i-- > 0;) {
        double g = adj[i];
        if (g == 0.0) continue;
        const Node& n = nodes_[i];
        switch (n.op) {
            case OpKind::constant:
                break;
            case OpKind::add:
                adj[n.a] += g;
                adj[n.b] += g;
                break;
            case OpKind::sub:
                adj[n.a] += g;
                adj[n.b] -= g;
                break;
            case OpKind::mul:
                adj[n.a] += g * nodes_[n.b].val;
                adj[n.b] += g * nodes_[n.a].val;
                break;
            case OpKind::div: {
                double b = nodes_[n.b].val;
                adj[n.a] += g / b;
                adj[n.b] -= g * n.val / b;
                break;
            }
            case OpKind::neg:
                adj[n.a] -= g;
                break;
            case OpKind::min:
                // Tie goes to the first operand; fixed so runs are reproducible.
                if (nodes_[n.a].val <= nodes_[n.b].val) adj[n.a] += g;
                else adj[n.b] += g;
                break;
            case OpKind::max:
                if (nodes_[n.a].val >= nodes_[n.b].val) adj[n.a] += g;
                else adj[n.b] += g;
                break;
            case OpKind::relu:
                // Subgradient 0 at the kink.
                if (nodes_[n.a].val > 0) adj[n.a] += g;
                break;
            case OpKind::sigmoid:
                adj[n.a] += g * n.val * (1.0 - n.val);
                break;
            case OpKind::abs: {
                double a = nodes_[n.a].val;
                if (a > 0) adj[n.a] += g;
                else if (a < 0) adj[n.a] -= g;
                break;
            }
            case OpKind::clamp01: {
                // Derivative 0 at and beyond both endpoints.
                double a = nodes_[n.a].val;
                if (a > 0 && a < 1) adj[n.a] += g;
                break;
            }
            case OpKind::log:
                adj[n.a] += g / nodes_[n.a].val;
                break;
            case OpKind::sqrt:
                if (n.val > 0) adj[n.a] += g * 0.5 / n.val;
                break;
            case OpKind::detach:
                break;
        }
    }
    return adj;
}

std::vector<double> grad(const Tape& tape, NodeHandle output,
                         std::span<const NodeHandle> leaves) {
    std::vector<double> adj = tape.adjoints(output);
    std::vector<double> out(leaves.size(), 0.0);
    for (std::size_t i = 0; i < leaves.size(); ++i) {
        if (leaves[i].index < adj.size()) out[i] = adj[leaves[i].index];
    }
    return out;
}

}  // namespace nssafe
