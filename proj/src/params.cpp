#include "nssafe/params.hpp"

#include <cmath>
#include <cstddef>

#include "json.hpp"
#include "nssafe/errors.hpp"

namespace nssafe {

void MlpSpec::validate() const {
    if (widths.size() < 2) throw ShapeError("MlpSpec needs at least one layer");
    if (activations.size() != widths.size() - 1)
        throw ShapeError("MlpSpec needs one activation per layer");
    for (int w : widths)
        if (w <= 0) throw ShapeError("MlpSpec widths must be positive");
}

MlpSpec MlpSpec::dense(int in, const std::vector<int>& hidden, int out, Activation last) {
    MlpSpec spec;
    spec.widths.push_back(in);
    for (int h : hidden) {
        spec.widths.push_back(h);
        spec.activations.push_back(Activation::relu);
    }
    spec.widths.push_back(out);
    spec.activations.push_back(last);
    spec.validate();
    return spec;
}

void ParameterStore::add(const std::string& module, const std::string& tensor, Tensor t) {
    std::size_t expect = 1;
    for (int d : t.shape) expect *= static_cast<std::size_t>(d);
    if (expect != t.data.size()) throw ShapeError("tensor data does not match shape");
    entries_[module][tensor] = std::move(t);
}

bool ParameterStore::has(const std::string& module, const std::string& tensor) const {
    auto it = entries_.find(module);
    return it != entries_.end() && it->second.count(tensor) > 0;
}

Tensor& ParameterStore::at(const std::string& module, const std::string& tensor) {
    auto it = entries_.find(module);
    if (it == entries_.end() || !it->second.count(tensor))
        throw ShapeError("unknown parameter tensor " + module + "/" + tensor);
    return it->second.at(tensor);
}

const Tensor& ParameterStore::at(const std::string& module, const std::string& tensor) const {
    auto it = entries_.find(module);
    if (it == entries_.end() || !it->second.count(tensor))
        throw ShapeError("unknown parameter tensor " + module + "/" + tensor);
    return it->second.at(tensor);
}

std::size_t ParameterStore::total_count() const {
    std::size_t n = 0;
    for (const auto& [m, ts] : entries_)
        for (const auto& [name, t] : ts) n += t.count();
    return n;
}

std::vector<double> ParameterStore::flatten() const {
    std::vector<double> flat;
    flat.reserve(total_count());
    for (const auto& [m, ts] : entries_)
        for (const auto& [name, t] : ts)
            flat.insert(flat.end(), t.data.begin(), t.data.end());
    return flat;
}

void ParameterStore::unflatten(const std::vector<double>& flat) {
    if (flat.size() != total_count()) throw ShapeError("flat size mismatch in unflatten");
    std::size_t pos = 0;
    for (auto& [m, ts] : entries_)
        for (auto& [name, t] : ts) {
            for (double& x : t.data) x = flat[pos++];
        }
}

std::string ParameterStore::to_json() const {
    nlohmann::json root = nlohmann::json::object();
    for (const auto& [m, ts] : entries_) {
        nlohmann::json mod = nlohmann::json::object();
        for (const auto& [name, t] : ts) {
            mod[name] = {{"shape", t.shape}, {"data", t.data}};
        }
        root[m] = std::move(mod);
    }
    return root.dump(2) + "\n";
}

ParameterStore ParameterStore::from_json(const std::string& text) {
    nlohmann::json root = nlohmann::json::parse(text);
    ParameterStore store;
    for (auto& [m, mod] : root.items()) {
        for (auto& [name, t] : mod.items()) {
            Tensor tensor;
            tensor.shape = t.at("shape").get<std::vector<int>>();
            tensor.data = t.at("data").get<std::vector<double>>();
            store.add(m, name, std::move(tensor));
        }
    }
    return store;
}

void ParameterStore::init_mlp(ParameterStore& store, const std::string& module,
                              const MlpSpec& spec, Rng& rng) {
    spec.validate();
    for (int l = 0; l < spec.layer_count(); ++l) {
        int in = spec.widths[l];
        int out = spec.widths[l + 1];
        double bound = 1.0 / std::sqrt(static_cast<double>(in));
        Tensor w{{out, in}, std::vector<double>(static_cast<std::size_t>(out) * in)};
        for (double& x : w.data) x = rng.next_uniform(-bound, bound);
        Tensor b{{out}, std::vector<double>(static_cast<std::size_t>(out))};
        for (double& x : b.data) x = rng.next_uniform(-bound, bound);
        store.add(module, "W" + std::to_string(l), std::move(w));
        store.add(module, "b" + std::to_string(l), std::move(b));
    }
}

const std::vector<NodeHandle>& LiftedParams::tensor(const std::string& module,
                                                    const std::string& name) const {
    auto it = nodes.find(module);
    if (it == nodes.end() || !it->second.count(name))
        throw ShapeError("unlifted parameter tensor " + module + "/" + name);
    return it->second.at(name);
}

LiftedParams lift(const ParameterStore& params, Tape& tape) {
    LiftedParams out;
    for (const auto& [m, ts] : params.entries()) {
        for (const auto& [name, t] : ts) {
            std::vector<NodeHandle> hs;
            hs.reserve(t.count());
            for (double v : t.data) hs.push_back(tape.constant(v));
            out.leaves.insert(out.leaves.end(), hs.begin(), hs.end());
            out.nodes[m][name] = std::move(hs);
        }
    }
    return out;
}

namespace {

template <class Val, class Weights>
std::vector<Val> mlp_forward_impl(const MlpSpec& spec, const Weights& weights,
                                  const std::vector<Val>& input) {
    spec.validate();
    if (static_cast<int>(input.size()) != spec.input_width())
        throw ShapeError("mlp input width mismatch");
    std::vector<Val> cur = input;
    for (int l = 0; l < spec.layer_count(); ++l) {
        const auto [w, b] = weights(l);
        int in = spec.widths[l];
        int out = spec.widths[l + 1];
        if (static_cast<int>(w.size()) != in * out || static_cast<int>(b.size()) != out)
            throw ShapeError("mlp layer tensor shape mismatch");
        std::vector<Val> next;
        next.reserve(out);
        for (int o = 0; o < out; ++o) {
            Val acc = b[static_cast<std::size_t>(o)];
            for (int i = 0; i < in; ++i) {
                acc = s_add(acc, s_mul(w[static_cast<std::size_t>(o) * in + i], cur[i]));
            }
            switch (spec.activations[l]) {
                case Activation::relu: acc = s_relu(acc); break;
                case Activation::sigmoid: acc = s_sigmoid(acc); break;
                case Activation::none: break;
            }
            next.push_back(acc);
        }
        cur = std::move(next);
    }
    return cur;
}

}  // namespace

std::vector<TapeVal> mlp_forward(Tape& tape, const MlpSpec& spec, const LiftedParams& lifted,
                                 const std::string& module, const std::vector<TapeVal>& input) {
    auto weights = [&](int l) {
        const auto& w = lifted.tensor(module, "W" + std::to_string(l));
        const auto& b = lifted.tensor(module, "b" + std::to_string(l));
        std::vector<TapeVal> wv, bv;
        wv.reserve(w.size());
        bv.reserve(b.size());
        for (NodeHandle h : w) wv.push_back(TapeVal{&tape, h});
        for (NodeHandle h : b) bv.push_back(TapeVal{&tape, h});
        return std::pair(std::move(wv), std::move(bv));
    };
    return mlp_forward_impl<TapeVal>(spec, weights, input);
}

std::vector<double> mlp_forward(const MlpSpec& spec, const ParameterStore& params,
                                const std::string& module, const std::vector<double>& input) {
    auto weights = [&](int l) {
        return std::pair(params.at(module, "W" + std::to_string(l)).data,
                         params.at(module, "b" + std::to_string(l)).data);
    };
    return mlp_forward_impl<double>(spec, weights, input);
}

void adam_step(std::vector<double>& theta, const std::vector<double>& grads, AdamState& state) {
    if (theta.size() != grads.size() || theta.size() != state.m.size())
        throw ShapeError("adam_step size mismatch");
    const AdamConfig& c = state.cfg;
    state.step += 1;
    double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step));
    double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < theta.size(); ++i) {
        double g = grads[i];
        if (!std::isfinite(g)) throw NumericError("non-finite gradient in adam_step");
        g += c.weight_decay * theta[i];
        state.m[i] = c.beta1 * state.m[i] + (1.0 - c.beta1) * g;
        state.v[i] = c.beta2 * state.v[i] + (1.0 - c.beta2) * g * g;
        double mhat = state.m[i] / bc1;
        double vhat = state.v[i] / bc2;
        double upd = theta[i] - c.lr * mhat / (std::sqrt(vhat) + c.eps);
        if (!std::isfinite(upd)) throw NumericError("non-finite parameter in adam_step");
        theta[i] = upd;
    }
}

void adam_step(ParameterStore& params, const std::vector<double>& grads, AdamState& state) {
    std::vector<double> flat = params.flatten();
    adam_step(flat, grads, state);
    params.unflatten(flat);
}

}  // namespace nssafe
