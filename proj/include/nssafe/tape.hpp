#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "nssafe/errors.hpp"

namespace nssafe {

enum class OpKind : std::uint8_t {
    constant,
    add,
    sub,
    mul,
    div,
    neg,
    min,
    max,
    relu,
    sigmoid,
    abs,
    clamp01,
    log,
    sqrt,
    detach,
};

struct NodeHandle {
    std::uint32_t index = 0;
    friend bool operator==(NodeHandle a, NodeHandle b) { return a.index == b.index; }
};

// Reverse-mode tape of scalar operations. Nodes are appended with their
// primal value computed eagerly; operands always point backwards, so a
// single reverse sweep yields all adjoints. Tapes are single-owner: one
// trajectory (or one loss evaluation) per tape, never shared across threads.
class Tape {
  public:
    struct Node {
        OpKind op;
        std::uint32_t a;
        std::uint32_t b;
        double val;
    };

    NodeHandle constant(double v);
    NodeHandle unary(OpKind op, NodeHandle x);
    NodeHandle binary(OpKind op, NodeHandle x, NodeHandle y);

    double value(NodeHandle h) const { return nodes_[h.index].val; }
    std::size_t size() const { return nodes_.size(); }

    // Keeps the allocation, drops the nodes. Lets a worker thread reuse
    // one tape across many trajectories.
    void clear() { nodes_.clear(); }
    void reserve(std::size_t n) { nodes_.reserve(n); }

    // d(output)/d(node) for every node up to `output`, by reverse sweep.
    std::vector<double> adjoints(NodeHandle output) const;

    const std::vector<Node>& nodes() const { return nodes_; }

  private:
    NodeHandle emit(OpKind op, std::uint32_t a, std::uint32_t b, double val);
    std::vector<Node> nodes_;
};

// Generic apply: const takes no operands (value passed via `payload`),
// unary ops one, binary ops two.
NodeHandle apply(Tape& tape, OpKind op, std::span<const NodeHandle> operands,
                 double payload = 0.0);

// d(output)/d(leaf) for each requested leaf.
std::vector<double> grad(const Tape& tape, NodeHandle output,
                         std::span<const NodeHandle> leaves);

// Thin value wrapper so transformer code reads like arithmetic. Carries the
// tape pointer; mixing values from different tapes is a logic error and is
// asserted in debug builds only (hot path).
struct TapeVal {
    Tape* tape = nullptr;
    NodeHandle h;

    double primal() const { return tape->value(h); }
};

inline TapeVal make_val(Tape& t, double v) { return {&t, t.constant(v)}; }

inline TapeVal operator+(TapeVal x, TapeVal y) { return {x.tape, x.tape->binary(OpKind::add, x.h, y.h)}; }
inline TapeVal operator-(TapeVal x, TapeVal y) { return {x.tape, x.tape->binary(OpKind::sub, x.h, y.h)}; }
inline TapeVal operator*(TapeVal x, TapeVal y) { return {x.tape, x.tape->binary(OpKind::mul, x.h, y.h)}; }
inline TapeVal operator/(TapeVal x, TapeVal y) { return {x.tape, x.tape->binary(OpKind::div, x.h, y.h)}; }
inline TapeVal operator-(TapeVal x) { return {x.tape, x.tape->unary(OpKind::neg, x.h)}; }

// The scalar vocabulary shared by the concrete (double) and tape-backed
// evaluation paths. The symbolic executors are templated over it, so the
// verifier can run primal-only at full speed while training runs the same
// code with gradients.
inline double s_add(double a, double b) { return a + b; }
inline double s_sub(double a, double b) { return a - b; }
inline double s_mul(double a, double b) { return a * b; }
inline double s_div(double a, double b) {
    if (b == 0.0) throw DomainError("division by zero");
    return a / b;
}
inline double s_neg(double a) { return -a; }
inline double s_min(double a, double b) { return a <= b ? a : b; }
inline double s_max(double a, double b) { return a >= b ? a : b; }
double s_relu(double a);
double s_sigmoid(double a);
inline double s_abs(double a) { return a < 0 ? -a : a; }
double s_clamp01(double a);
double s_log(double a);
double s_sqrt(double a);
inline double s_detach(double a) { return a; }
inline double s_primal(double a) { return a; }
inline double s_const_like(double /*exemplar*/, double v) { return v; }

inline TapeVal s_add(TapeVal a, TapeVal b) { return a + b; }
inline TapeVal s_sub(TapeVal a, TapeVal b) { return a - b; }
inline TapeVal s_mul(TapeVal a, TapeVal b) { return a * b; }
inline TapeVal s_div(TapeVal a, TapeVal b) { return a / b; }
inline TapeVal s_neg(TapeVal a) { return -a; }
inline TapeVal s_min(TapeVal a, TapeVal b) { return {a.tape, a.tape->binary(OpKind::min, a.h, b.h)}; }
inline TapeVal s_max(TapeVal a, TapeVal b) { return {a.tape, a.tape->binary(OpKind::max, a.h, b.h)}; }
inline TapeVal s_relu(TapeVal a) { return {a.tape, a.tape->unary(OpKind::relu, a.h)}; }
inline TapeVal s_sigmoid(TapeVal a) { return {a.tape, a.tape->unary(OpKind::sigmoid, a.h)}; }
inline TapeVal s_abs(TapeVal a) { return {a.tape, a.tape->unary(OpKind::abs, a.h)}; }
inline TapeVal s_clamp01(TapeVal a) { return {a.tape, a.tape->unary(OpKind::clamp01, a.h)}; }
inline TapeVal s_log(TapeVal a) { return {a.tape, a.tape->unary(OpKind::log, a.h)}; }
inline TapeVal s_sqrt(TapeVal a) { return {a.tape, a.tape->unary(OpKind::sqrt, a.h)}; }
inline TapeVal s_detach(TapeVal a) { return {a.tape, a.tape->unary(OpKind::detach, a.h)}; }
inline double s_primal(TapeVal a) { return a.primal(); }
inline TapeVal s_const_like(TapeVal exemplar, double v) { return make_val(*exemplar.tape, v); }

}  // namespace nssafe
