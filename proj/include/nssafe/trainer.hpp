#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "nssafe/datagen.hpp"
#include "nssafe/exec.hpp"
#include "nssafe/ir.hpp"
#include "nssafe/params.hpp"

namespace nssafe {

struct TrainConfig {
    std::string mode = "dse";  // dse | diffai_plus | ablation
    double nu = 0.01;          // duality-gap convergence threshold
    double lambda_upper = 10.0;  // S
    double lambda_eta = 0.1;     // multiplicative update rate
    int inner_epochs = 100;      // Adam epochs per Best_theta round
    int gap_epochs = 20;         // Best_theta budget for the L_min probe
    bool compute_gap = true;
    int max_epochs = 1500;
    int early_stop_window = 200;
    double early_stop_ratio = 0.01;
    int warm_start_epochs = 0;  // data-loss-only epochs before the game
    int checkpoint_every = 0;   // main epochs between parameter checkpoints
    AdamConfig adam;
    SampleConfig sample;
    SoundConfig sound;
    std::uint64_t seed = 0;
};

struct LagrangeState {
    double upper = 10.0;  // S
    double weight = 1.0;  // exponentiated-gradient weight on the {0, S} pair

    double lambda() const { return upper * weight / (1.0 + weight); }
};

struct IterateInfo {
    ParameterStore theta;
    double q = 0.0;
    double c = 0.0;
    double lambda = 0.0;
};

struct MixtureState {
    std::vector<IterateInfo> iterates;

    double mean_q() const;
    double mean_c() const;
    double lambda_hat() const;
};

struct CurveRow {
    int epoch = 0;
    double q = 0.0;
    double c = 0.0;  // NaN when the mode tracks no safety loss
    double lambda = 0.0;
    double l_max = 0.0;
    double l_min = 0.0;
    double wallclock_s = 0.0;
};

struct TrainResult {
    ParameterStore theta;      // penalized-best iterate
    MixtureState mixture;
    std::vector<CurveRow> curves;
    std::string stop_reason;   // converged | early_stop | budget_exhausted
    int epochs_run = 0;
    double final_q = 0.0;
    double final_c = 0.0;
};

// Q: per-module MSE over its pair set, averaged across modules, as one
// differentiable node on `tape`.
TapeVal data_loss(Tape& tape, const Program& p, const LiftedParams& lifted, const Dataset& d);
double data_loss_value(const Program& p, const ParameterStore& params, const Dataset& d);

inline double lagrangian(double q, double c, double lambda) { return q + lambda * c; }

// Best response of the lambda player: 0 when the mixture is safe, else S.
inline double best_lambda(double c_value, double upper) { return c_value <= 0.0 ? 0.0 : upper; }

// Constant-time multiplicative update on the {0, S} pair:
// w <- w * exp(eta * C#(theta_t)), lambda = S w / (1 + w).
double lambda_update(const MixtureState& mixture, LagrangeState& state, double eta);

// The two-player objective seen by the game loop. ProgramGame runs Adam on
// Q + lambda * C# for the configured mode; tests plug in analytic games.
class GameObjective {
  public:
    virtual ~GameObjective() = default;
    struct Eval {
        double q = 0.0;
        double c = 0.0;
    };
    // Deterministic evaluation of (Q, C#) at a fixed evaluation seed.
    virtual Eval eval(const ParameterStore& theta, std::uint64_t eval_seed) = 0;
    // Approximate best response: min_theta Q + lambda C#, warm-started.
    // epoch_base keys the per-epoch sampling streams; the hook (if any)
    // observes each epoch for curve logging.
    using EpochHook = std::function<void(int epoch, double q, double c)>;
    virtual ParameterStore best_theta(double lambda, ParameterStore theta, int epochs,
                                      int epoch_base, const EpochHook& hook) = 0;
};

class ProgramGame final : public GameObjective {
  public:
    ProgramGame(const Program& normalized, const Dataset& train, const TrainConfig& cfg);
    Eval eval(const ParameterStore& theta, std::uint64_t eval_seed) override;
    ParameterStore best_theta(double lambda, ParameterStore theta, int epochs, int epoch_base,
                              const EpochHook& hook) override;

  private:
    const Program& program_;
    const Dataset& train_;
    TrainConfig cfg_;
};

// Snapshot of the game loop at a round boundary; enough to resume with
// bit-identical continuation.
struct GameState {
    int round = 0;
    int epoch_count = 0;
    ParameterStore theta;
    double lag_weight = 1.0;
    MixtureState mixture;
    std::vector<double> final_loss_hist;
    double cur_lmax = 0.0;
    double cur_lmin = 0.0;

    std::string to_json() const;
    static GameState from_json(const std::string& text);
};

struct GameHooks {
    std::function<void(const GameState&)> on_round;  // called at each round boundary
    const GameState* resume = nullptr;
};

// Algorithm: alternate Best_theta with the multiplicative lambda update,
// maintain the uniform iterate mixture, stop on duality gap < nu, early
// stop, or the epoch budget. Returns the iterate minimizing
// Q + S * max(C#, 0) along with the full mixture.
TrainResult run_game(GameObjective& game, ParameterStore theta0, const TrainConfig& cfg,
                     const GameHooks* hooks = nullptr);

// Convenience wrapper: builds ProgramGame (with optional warm start) from a
// normalized program and dataset.
TrainResult train(const Program& normalized, const Dataset& train_data, ParameterStore theta0,
                  const TrainConfig& cfg);

ParameterStore init_params(const Program& p, std::uint64_t seed);

std::string curves_to_csv(const std::vector<CurveRow>& rows, bool with_c, bool with_timing);

}  // namespace nssafe
