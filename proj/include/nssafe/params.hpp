#pragma once

#include <map>
#include <string>
#include <vector>

#include "nssafe/rng.hpp"
#include "nssafe/tape.hpp"

namespace nssafe {

enum class Activation { none, relu, sigmoid };

// Layer widths include the input width: widths = {in, h1, ..., out} with
// one activation per layer (widths.size() - 1 of them).
struct MlpSpec {
    std::vector<int> widths;
    std::vector<Activation> activations;

    int input_width() const { return widths.front(); }
    int output_width() const { return widths.back(); }
    int layer_count() const { return static_cast<int>(widths.size()) - 1; }
    void validate() const;

    // Standard architectures from the benchmarks: ReLU after every hidden
    // layer, then `last` on the output.
    static MlpSpec dense(int in, const std::vector<int>& hidden, int out, Activation last);
};

struct Tensor {
    std::vector<int> shape;
    std::vector<double> data;  // row-major

    std::size_t count() const { return data.size(); }
};

// Flat collection of named parameters, addressed (module, tensor).
// Shapes are fixed at creation; training only rewrites values.
class ParameterStore {
  public:
    void add(const std::string& module, const std::string& tensor, Tensor t);
    bool has(const std::string& module, const std::string& tensor) const;
    Tensor& at(const std::string& module, const std::string& tensor);
    const Tensor& at(const std::string& module, const std::string& tensor) const;

    const std::map<std::string, std::map<std::string, Tensor>>& entries() const {
        return entries_;
    }

    std::size_t total_count() const;

    // Flat view in deterministic (module, tensor, row-major) order.
    std::vector<double> flatten() const;
    void unflatten(const std::vector<double>& flat);

    std::string to_json() const;
    static ParameterStore from_json(const std::string& text);

    // Per-layer weight/bias tensors for `spec`, PyTorch-style uniform
    // init U(-1/sqrt(fan_in), +1/sqrt(fan_in)).
    static void init_mlp(ParameterStore& store, const std::string& module,
                         const MlpSpec& spec, Rng& rng);

  private:
    std::map<std::string, std::map<std::string, Tensor>> entries_;
};

// Parameter leaves lifted onto a tape, same deterministic order as
// ParameterStore::flatten.
struct LiftedParams {
    std::map<std::string, std::map<std::string, std::vector<NodeHandle>>> nodes;
    std::vector<NodeHandle> leaves;  // flat order

    const std::vector<NodeHandle>& tensor(const std::string& module,
                                          const std::string& name) const;
};

LiftedParams lift(const ParameterStore& params, Tape& tape);

// Dense forward pass with scalar ops; weights may be tape nodes (training)
// or plain doubles (primal-only evaluation). W{i} has shape (out, in),
// b{i} shape (out).
std::vector<TapeVal> mlp_forward(Tape& tape, const MlpSpec& spec, const LiftedParams& lifted,
                                 const std::string& module, const std::vector<TapeVal>& input);
std::vector<double> mlp_forward(const MlpSpec& spec, const ParameterStore& params,
                                const std::string& module, const std::vector<double>& input);

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 1e-6;
};

// Moments are kept flat, aligned with ParameterStore::flatten order.
struct AdamState {
    std::vector<double> m;
    std::vector<double> v;
    long step = 0;
    AdamConfig cfg;

    static AdamState init(std::size_t n, AdamConfig cfg) {
        return AdamState{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0), 0, cfg};
    }
};

// Classic Adam with the weight-decay term folded into the gradient
// (g += wd * theta), not the decoupled variant.
void adam_step(std::vector<double>& theta, const std::vector<double>& grads, AdamState& state);
void adam_step(ParameterStore& params, const std::vector<double>& grads, AdamState& state);

}  // namespace nssafe
