#include "nssafe/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

#include "json.hpp"
#include "nssafe/parallel.hpp"

namespace nssafe {

double MixtureState::mean_q() const {
    double s = 0.0;
    for (const IterateInfo& it : iterates) s += it.q;
    return iterates.empty() ? 0.0 : s / static_cast<double>(iterates.size());
}

double MixtureState::mean_c() const {
    double s = 0.0;
    for (const IterateInfo& it : iterates) s += it.c;
    return iterates.empty() ? 0.0 : s / static_cast<double>(iterates.size());
}

double MixtureState::lambda_hat() const {
    double s = 0.0;
    for (const IterateInfo& it : iterates) s += it.lambda;
    return iterates.empty() ? 0.0 : s / static_cast<double>(iterates.size());
}

double lambda_update(const MixtureState& mixture, LagrangeState& state, double eta) {
    if (mixture.iterates.empty()) throw ConfigError("lambda_update needs at least one iterate");
    double c = mixture.iterates.back().c;
    double w = state.weight * std::exp(eta * c);
    state.weight = std::min(std::max(w, 1e-12), 1e12);
    return state.lambda();
}

// --- data loss ---------------------------------------------------------------

namespace {

struct ModuleWeighting {
    // per-element weight so that sum over all (record, output element)
    // squared errors equals the module-averaged MSE
    std::map<std::string, double> weight;
    bool empty = true;
};

ModuleWeighting dataset_weights(const Program& p, const Dataset& d) {
    ModuleWeighting w;
    auto groups = d.by_module();
    if (groups.empty()) return w;
    for (const auto& [mod, idx] : groups) {
        if (!p.modules.count(mod)) throw EmptyDataset("dataset module not in program: " + mod);
        double dims = static_cast<double>(p.modules.at(mod).output_width());
        w.weight[mod] = 1.0 / (static_cast<double>(groups.size()) *
                               static_cast<double>(idx.size()) * dims);
    }
    w.empty = false;
    return w;
}

}  // namespace

TapeVal data_loss(Tape& tape, const Program& p, const LiftedParams& lifted, const Dataset& d) {
    if (d.empty()) throw EmptyDataset("data_loss over empty dataset");
    ModuleWeighting w = dataset_weights(p, d);
    TapeVal acc = make_val(tape, 0.0);
    for (const IoRecord& r : d.records) {
        const MlpSpec& spec = p.modules.at(r.module);
        std::vector<TapeVal> in;
        in.reserve(r.input.size());
        for (double v : r.input) in.push_back(make_val(tape, v));
        std::vector<TapeVal> out = mlp_forward(tape, spec, lifted, r.module, in);
        TapeVal wv = make_val(tape, w.weight.at(r.module));
        for (std::size_t k = 0; k < out.size(); ++k) {
            TapeVal err = out[k] - make_val(tape, r.output[k]);
            acc = acc + wv * err * err;
        }
    }
    return acc;
}

double data_loss_value(const Program& p, const ParameterStore& params, const Dataset& d) {
    if (d.empty()) throw EmptyDataset("data_loss over empty dataset");
    ModuleWeighting w = dataset_weights(p, d);
    double acc = 0.0;
    for (const IoRecord& r : d.records) {
        std::vector<double> out = mlp_forward(p.modules.at(r.module), params, r.module, r.input);
        for (std::size_t k = 0; k < out.size(); ++k) {
            double err = out[k] - r.output[k];
            acc += w.weight.at(r.module) * err * err;
        }
    }
    return acc;
}

namespace {

// Full-batch gradient of Q, chunked by record index so the reduction order
// (and therefore every bit of the result) is independent of thread count.
LossGrad data_loss_grad(const Program& p, const ParameterStore& params, const Dataset& d,
                        const ModuleWeighting& w) {
    std::size_t n_params = params.total_count();
    LossGrad out;
    out.grad.assign(n_params, 0.0);
    if (d.empty()) return out;

    const std::size_t n = d.records.size();
    const std::size_t chunk = std::max<std::size_t>(1, (n + 63) / 64);
    const std::size_t n_chunks = (n + chunk - 1) / chunk;
    std::vector<LossGrad> parts(n_chunks);
    parallel_for(n_chunks, [&](std::size_t ci) {
        Tape tape;
        LiftedParams lifted = lift(params, tape);
        TapeVal acc = make_val(tape, 0.0);
        std::size_t lo = ci * chunk;
        std::size_t hi = std::min(n, lo + chunk);
        for (std::size_t i = lo; i < hi; ++i) {
            const IoRecord& r = d.records[i];
            std::vector<TapeVal> in;
            in.reserve(r.input.size());
            for (double v : r.input) in.push_back(make_val(tape, v));
            std::vector<TapeVal> pred = mlp_forward(tape, p.modules.at(r.module), lifted,
                                                    r.module, in);
            TapeVal wv = make_val(tape, w.weight.at(r.module));
            for (std::size_t k = 0; k < pred.size(); ++k) {
                TapeVal err = pred[k] - make_val(tape, r.output[k]);
                acc = acc + wv * err * err;
            }
        }
        parts[ci].value = acc.primal();
        parts[ci].grad = grad(tape, acc.h, lifted.leaves);
    });
    for (const LossGrad& part : parts) {
        out.value += part.value;
        for (std::size_t j = 0; j < n_params; ++j) out.grad[j] += part.grad[j];
    }
    return out;
}

}  // namespace

// --- program game -------------------------------------------------------------

ProgramGame::ProgramGame(const Program& normalized, const Dataset& train,
                         const TrainConfig& cfg)
    : program_(normalized), train_(train), cfg_(cfg) {
    if (!normalized.guards_normalized)
        throw DomainError("training requires a guard-normalized program");
}

GameObjective::Eval ProgramGame::eval(const ParameterStore& theta, std::uint64_t eval_seed) {
    Eval e;
    if (!train_.empty()) e.q = data_loss_value(program_, theta, train_);
    if (cfg_.mode == "dse") {
        SampleConfig sc = cfg_.sample;
        sc.seed = eval_seed;
        e.c = dse_loss_value(program_, theta, sc);
    } else if (cfg_.mode == "diffai_plus") {
        e.c = sound_loss_value(program_, theta, cfg_.sound);
    } else {
        e.c = 0.0;
    }
    return e;
}

ParameterStore ProgramGame::best_theta(double lambda, ParameterStore theta, int epochs,
                                       int epoch_base, const EpochHook& hook) {
    ModuleWeighting weighting = dataset_weights(program_, train_);
    std::size_t n_params = theta.total_count();
    AdamState adam = AdamState::init(n_params, cfg_.adam);

    ParameterStore best = theta;
    double best_obj = std::numeric_limits<double>::infinity();

    for (int e = 0; e < epochs; ++e) {
        int abs_epoch = epoch_base + e;
        LossGrad dq;
        dq.grad.assign(n_params, 0.0);
        if (!train_.empty()) dq = data_loss_grad(program_, theta, train_, weighting);

        LossGrad dc;
        dc.grad.assign(n_params, 0.0);
        bool track_c = cfg_.mode != "ablation";
        if (cfg_.mode == "dse") {
            SampleConfig sc = cfg_.sample;
            sc.seed = hash_combine(cfg_.seed, 0xDCE5u, static_cast<std::uint64_t>(abs_epoch));
            dc = dse_loss_grad(program_, theta, sc);
        } else if (cfg_.mode == "diffai_plus") {
            dc = sound_loss_grad(program_, theta, cfg_.sound);
        }

        double objective = dq.value + lambda * dc.value;
        if (objective < best_obj) {
            best_obj = objective;
            best = theta;
        }
        if (hook) hook(abs_epoch, dq.value, track_c ? dc.value : std::nan(""));

        std::vector<double> g(n_params, 0.0);
        for (std::size_t j = 0; j < n_params; ++j) g[j] = dq.grad[j] + lambda * dc.grad[j];
        adam_step(theta, g, adam);
    }
    // the last iterate counts too
    GameObjective::Eval fin;
    if (!train_.empty()) fin.q = data_loss_value(program_, theta, train_);
    if (cfg_.mode == "dse") {
        SampleConfig sc = cfg_.sample;
        sc.seed = hash_combine(cfg_.seed, 0xDCE5u, static_cast<std::uint64_t>(epoch_base + epochs));
        fin.c = dse_loss_value(program_, theta, sc);
    } else if (cfg_.mode == "diffai_plus") {
        fin.c = sound_loss_value(program_, theta, cfg_.sound);
    }
    double fin_obj = fin.q + lambda * fin.c;
    return fin_obj < best_obj ? theta : best;
}

// --- the game loop -------------------------------------------------------------

TrainResult run_game(GameObjective& game, ParameterStore theta0, const TrainConfig& cfg,
                     const GameHooks* hooks) {
    TrainResult result;
    result.stop_reason = "budget_exhausted";
    LagrangeState lag;
    lag.upper = cfg.lambda_upper;
    MixtureState mixture;

    auto t0 = std::chrono::steady_clock::now();
    auto now_s = [&] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    };

    std::vector<double> final_loss_hist;
    bool early_stop = false;
    int epoch_count = 0;
    int round_base = 0;
    double cur_lmax = 0.0, cur_lmin = 0.0;

    if (hooks && hooks->resume) {
        const GameState& st = *hooks->resume;
        round_base = st.round;
        epoch_count = st.epoch_count;
        theta0 = st.theta;
        lag.weight = st.lag_weight;
        mixture = st.mixture;
        final_loss_hist = st.final_loss_hist;
        cur_lmax = st.cur_lmax;
        cur_lmin = st.cur_lmin;
    }

    auto push_row = [&](int epoch, double q, double c, double lambda) {
        CurveRow row;
        row.epoch = epoch;
        row.q = q;
        row.c = c;
        row.lambda = lambda;
        row.l_max = cur_lmax;
        row.l_min = cur_lmin;
        row.wallclock_s = now_s();
        result.curves.push_back(row);
        double fl = q + (std::isnan(c) ? 0.0 : c);  // A.7 convergence loss
        final_loss_hist.push_back(fl);
        std::size_t w = static_cast<std::size_t>(cfg.early_stop_window);
        if (final_loss_hist.size() > w) {
            double prev = final_loss_hist[final_loss_hist.size() - 1 - w];
            double decrease = prev - fl;
            if (decrease < cfg.early_stop_ratio * std::max(std::abs(prev), 1e-12))
                early_stop = true;
        }
    };

    ParameterStore theta = std::move(theta0);
    for (int round = round_base; !early_stop && epoch_count < cfg.max_epochs; ++round) {
        double lambda_t = lag.lambda();
        int budget = std::min(cfg.inner_epochs, cfg.max_epochs - epoch_count);
        theta = game.best_theta(lambda_t, std::move(theta), budget, epoch_count,
                                [&](int epoch, double q, double c) {
                                    push_row(epoch, q, c, lambda_t);
                                });
        epoch_count += budget;

        std::uint64_t eval_seed = hash_combine(cfg.seed, 0xE7A1u,
                                               static_cast<std::uint64_t>(round));
        GameObjective::Eval ev = game.eval(theta, eval_seed);
        mixture.iterates.push_back(IterateInfo{theta, ev.q, ev.c, lambda_t});

        // Duality gap of the uniform mixture: exact mixture losses are the
        // iterate means.
        double qh = mixture.mean_q();
        double ch = mixture.mean_c();
        cur_lmax = lagrangian(qh, ch, best_lambda(ch, lag.upper));
        if (cfg.compute_gap) {
            double lam_hat = mixture.lambda_hat();
            ParameterStore probe = game.best_theta(lam_hat, theta, cfg.gap_epochs,
                                                   epoch_count, nullptr);
            GameObjective::Eval pe = game.eval(probe, eval_seed);
            cur_lmin = lagrangian(pe.q, pe.c, lam_hat);
            if (cur_lmax - cur_lmin < cfg.nu) {
                result.stop_reason = "converged";
                break;
            }
        }
        lambda_update(mixture, lag, cfg.lambda_eta);

        if (hooks && hooks->on_round) {
            GameState st;
            st.round = round + 1;
            st.epoch_count = epoch_count;
            st.theta = theta;
            st.lag_weight = lag.weight;
            st.mixture = mixture;
            std::size_t keep = static_cast<std::size_t>(cfg.early_stop_window);
            if (final_loss_hist.size() > keep)
                st.final_loss_hist.assign(final_loss_hist.end() - keep, final_loss_hist.end());
            else
                st.final_loss_hist = final_loss_hist;
            st.cur_lmax = cur_lmax;
            st.cur_lmin = cur_lmin;
            hooks->on_round(st);
        }
    }
    if (early_stop) result.stop_reason = "early_stop";

    // Extraction: the iterate with the best safety-penalized objective.
    std::size_t pick = 0;
    double best_score = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < mixture.iterates.size(); ++i) {
        const IterateInfo& it = mixture.iterates[i];
        double score = it.q + lag.upper * std::max(it.c, 0.0);
        if (score < best_score) {
            best_score = score;
            pick = i;
        }
    }
    if (mixture.iterates.empty()) {
        result.theta = std::move(theta);
    } else {
        result.theta = mixture.iterates[pick].theta;
        result.final_q = mixture.iterates[pick].q;
        result.final_c = mixture.iterates[pick].c;
    }
    result.mixture = std::move(mixture);
    result.epochs_run = epoch_count;
    return result;
}

TrainResult train(const Program& normalized, const Dataset& train_data, ParameterStore theta0,
                  const TrainConfig& cfg) {
    ProgramGame game(normalized, train_data, cfg);
    if (cfg.warm_start_epochs > 0 && !train_data.empty()) {
        TrainConfig warm = cfg;
        warm.mode = "ablation";
        ProgramGame warm_game(normalized, train_data, warm);
        theta0 = warm_game.best_theta(0.0, std::move(theta0), cfg.warm_start_epochs, 0, nullptr);
    }
    return run_game(game, std::move(theta0), cfg);
}

namespace {
std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}
}  // namespace

ParameterStore init_params(const Program& p, std::uint64_t seed) {
    ParameterStore store;
    for (const auto& [name, spec] : p.modules) {
        Rng rng(hash_combine(seed, fnv1a(name)));
        ParameterStore::init_mlp(store, name, spec, rng);
    }
    return store;
}

std::string GameState::to_json() const {
    nlohmann::json j;
    j["round"] = round;
    j["epoch_count"] = epoch_count;
    j["theta"] = nlohmann::json::parse(theta.to_json());
    j["lag_weight"] = lag_weight;
    nlohmann::json its = nlohmann::json::array();
    for (const IterateInfo& it : mixture.iterates) {
        its.push_back({{"theta", nlohmann::json::parse(it.theta.to_json())},
                       {"q", it.q},
                       {"c", it.c},
                       {"lambda", it.lambda}});
    }
    j["iterates"] = std::move(its);
    j["final_loss_hist"] = final_loss_hist;
    j["cur_lmax"] = cur_lmax;
    j["cur_lmin"] = cur_lmin;
    return j.dump() + "\n";
}

GameState GameState::from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    GameState st;
    st.round = j.at("round").get<int>();
    st.epoch_count = j.at("epoch_count").get<int>();
    st.theta = ParameterStore::from_json(j.at("theta").dump());
    st.lag_weight = j.at("lag_weight").get<double>();
    for (const auto& it : j.at("iterates")) {
        IterateInfo info;
        info.theta = ParameterStore::from_json(it.at("theta").dump());
        info.q = it.at("q").get<double>();
        info.c = it.at("c").get<double>();
        info.lambda = it.at("lambda").get<double>();
        st.mixture.iterates.push_back(std::move(info));
    }
    st.final_loss_hist = j.at("final_loss_hist").get<std::vector<double>>();
    st.cur_lmax = j.at("cur_lmax").get<double>();
    st.cur_lmin = j.at("cur_lmin").get<double>();
    return st;
}

std::string curves_to_csv(const std::vector<CurveRow>& rows, bool with_c, bool with_timing) {
    std::ostringstream out;
    out << "epoch,Q,C_sharp,lambda,L_max,L_min,wallclock_s\n";
    out.precision(17);
    for (const CurveRow& r : rows) {
        out << r.epoch << "," << r.q << ",";
        if (with_c && !std::isnan(r.c)) out << r.c;
        out << "," << r.lambda << "," << r.l_max << "," << r.l_min << ",";
        if (with_timing) out << r.wallclock_s;
        else out << "0";
        out << "\n";
    }
    return out.str();
}

}  // namespace nssafe
