#include "nssafe/verifier.hpp"

#include <algorithm>
#include <sstream>

#include "nssafe/exec.hpp"
#include "nssafe/parallel.hpp"
#include "nssafe/trainer.hpp"

namespace nssafe {

std::vector<int> default_grid(const Program& p) {
    std::size_t dims = p.input_vars().size();
    if (dims == 1) return {10000};
    return std::vector<int>(dims, 20);
}

VerifyResult verify(const Program& normalized, const ParameterStore& params,
                    const VerifyConfig& cfg, bool serial) {
    std::vector<int> grid = cfg.grid.empty() ? default_grid(normalized) : cfg.grid;
    std::vector<std::vector<Interval>> cells = split_input_grid(normalized, grid);
    WeightMap<double> weights = weights_primal(normalized, params);

    VerifyResult res;
    res.total_cells = static_cast<long>(cells.size());
    res.verdicts.resize(cells.size());
    parallel_for(
        cells.size(),
        [&](std::size_t i) {
            Box<double> start =
                make_start_box<double>(normalized, cells[i], [](double v) { return v; });
            SymbolicOptions<double> opts;
            opts.mode = BranchMode::join;
            SymRecord<double> rec = exec_symbolic(normalized, weights, std::move(start), opts);
            double worst = 0.0;
            for (double u : rec.unsafety_terms) worst = std::max(worst, u);
            CellVerdict& v = res.verdicts[i];
            v.index = static_cast<long>(i);
            v.cell = cells[i];
            v.worst_unsafe = worst;
            v.safe = worst <= cfg.zero_tol;
        },
        serial);
    for (const CellVerdict& v : res.verdicts)
        if (v.safe) res.safe_cells++;
    res.portion = res.total_cells == 0
                      ? 0.0
                      : static_cast<double>(res.safe_cells) / static_cast<double>(res.total_cells);
    return res;
}

double eval_concrete_safety(const Program& normalized, const ParameterStore& params,
                            int samples, std::uint64_t seed, bool serial) {
    std::vector<VarId> inputs = normalized.input_vars();
    std::vector<int> safe(static_cast<std::size_t>(samples), 0);
    parallel_for(
        static_cast<std::size_t>(samples),
        [&](std::size_t i) {
            Rng draw(hash_combine(seed, i, 0xC0C0));
            std::vector<double> input;
            input.reserve(inputs.size());
            for (VarId v : inputs) {
                const Interval& iv = *normalized.input_spec[static_cast<std::size_t>(v)];
                input.push_back(draw.next_uniform(iv.lo, iv.hi));
            }
            Rng run(hash_combine(seed, i, 0xD0D0));
            ConcreteResult res = exec_concrete(normalized, params, input, run);
            bool ok = true;
            for (double u : res.assert_values)
                if (u != 0.0) ok = false;
            safe[i] = ok ? 1 : 0;
        },
        serial);
    long n_safe = 0;
    for (int s : safe) n_safe += s;
    return samples == 0 ? 0.0 : static_cast<double>(n_safe) / static_cast<double>(samples);
}

double test_data_loss(const Program& p, const ParameterStore& params, const Dataset& test) {
    return data_loss_value(p, params, test);
}

std::string verdicts_to_csv(const VerifyResult& res) {
    std::ostringstream out;
    out.precision(17);
    std::size_t dims = res.verdicts.empty() ? 0 : res.verdicts.front().cell.size();
    out << "cell_index";
    for (std::size_t d = 0; d < dims; ++d) out << ",lo" << d << ",hi" << d;
    out << ",safe,worst_unsafe_value\n";
    for (const CellVerdict& v : res.verdicts) {
        out << v.index;
        for (const Interval& iv : v.cell) out << "," << iv.lo << "," << iv.hi;
        out << "," << (v.safe ? 1 : 0) << "," << v.worst_unsafe << "\n";
    }
    return out.str();
}

}  // namespace nssafe
