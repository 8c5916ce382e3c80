// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "qsched/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>

namespace qsched {

namespace {

std::vector<std::string> metrics_columns()
{
    return {"epoch", "mean_loss", "mean_reward", "val_det", "val_sto", "epsilon", "alpha", "seconds"};
}

void strip_timing(std::vector<EpochMetrics>& history, bool keep)
{
    if (!keep)
        for (auto& m : history)
            m.seconds = 0.0;
}

template <class Params>
double mean_det_sumrate(const Params& params, std::span<const GainMatrix> val, int l)
{
    double total = 0.0;
    for (const auto& g : val)
        total += sum_rate(g, top_l_select(forward(params, g).logits, l));
    return total / static_cast<double>(val.size());
}

double mean_over(std::span<const GainMatrix> set, const auto& fn)
{
    double total = 0.0;
    for (const auto& g : set)
        total += fn(g);
    return total / static_cast<double>(set.size());
}

double sample_std(const std::vector<double>& v)
{
    if (v.size() < 2)
        return 0.0;
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    double s = 0.0;
    for (double x : v)
        s += (x - mean) * (x - mean);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

Dataset in_memory_dataset(RunConfig cfg, std::uint64_t seed)
{
    cfg.system.seed = seed;
    return generate_dataset(cfg);
}

} // namespace

GenResult cmd_gen(const RunConfig& cfg)
{
    cfg.validate();
    GenResult res;
    res.path = cfg.dataset_path();
    if (const auto parent = std::filesystem::path(res.path).parent_path(); !parent.empty())
        ensure_directory(parent.string());
    res.dataset = generate_dataset(cfg);
    write_dataset(res.path, res.dataset);
    return res;
}

PolicyRun train_family(const RunConfig& cfg, const std::string& family, int qubits, const Dataset& ds,
                       std::uint64_t seed)
{
    TrainConfig tc = cfg.train;
    tc.seed = seed;
    auto init_rng = substream(seed, "init");
    const int k = ds.users;
    const int l = cfg.system.num_scheduled;
    const auto norm = Normalizer::fit(ds.train());
    PolicyRun run;
    if (family == "hybrid") {
        auto p = init_hybrid(k, qubits, cfg.n_layers, init_rng);
        p.norm = norm;
        auto res = train(p, ds.train(), ds.val(), l, tc);
        run.val_det = mean_det_sumrate(res.best, ds.val(), l);
        run.parameter_count = p.parameter_count();
        run.history = std::move(res.history);
    } else {
        auto p = init_cnn(k, init_rng);
        p.norm = norm;
        auto res = train(p, ds.train(), ds.val(), l, tc);
        run.val_det = mean_det_sumrate(res.best, ds.val(), l);
        run.parameter_count = p.parameter_count();
        run.history = std::move(res.history);
    }
    return run;
}

TrainOutcome cmd_train(const RunConfig& cfg)
{
    cfg.validate();
    const auto ds = read_dataset(cfg.dataset_path(), cfg.system.beta());
    if (ds.users != cfg.system.num_users)
        throw DataError("dataset has " + std::to_string(ds.users) + " users but the config expects " +
                        std::to_string(cfg.system.num_users));
    if (ds.train().empty() || ds.val().empty())
        throw DataError("dataset needs nonempty training and validation splits");
    ensure_directory(cfg.out_dir);

    TrainOutcome out;
    auto init_rng = substream(cfg.train.seed, "init");
    const auto norm = Normalizer::fit(ds.train());
    const int l = cfg.system.num_scheduled;

    auto finish = [&](auto&& res) {
        out.history = res.history;
        out.diagnostics = res.diagnostics;
        out.best_val_det = res.best_val_det;
        out.checkpoint.params = res.best;
        out.checkpoint.optimizer = res.best_optimizer;
        out.checkpoint.epoch = res.best_epoch;
    };
    if (cfg.model == "hybrid") {
        auto p = init_hybrid(cfg.system.num_users, cfg.n_qubits, cfg.n_layers, init_rng);
        p.norm = norm;
        finish(train(p, ds.train(), ds.val(), l, cfg.train));
    } else {
        auto p = init_cnn(cfg.system.num_users, init_rng);
        p.norm = norm;
        finish(train(p, ds.train(), ds.val(), l, cfg.train));
    }
    strip_timing(out.history, cfg.record_timing);
    out.checkpoint.config_hash = cfg.hash();
    out.checkpoint.history = out.history;

    CsvWriter csv("train_metrics", cfg.hash(), metrics_columns());
    for (const auto& m : out.history)
        csv.row({std::to_string(m.epoch), CsvWriter::num(m.mean_loss), CsvWriter::num(m.mean_reward),
                 CsvWriter::num(m.val_det), CsvWriter::num(m.val_sto), CsvWriter::num(m.epsilon),
                 CsvWriter::num(m.alpha), CsvWriter::num(m.seconds)});
    for (const auto& d : out.diagnostics)
        csv.comment(d);
    out.metrics_path = cfg.out_dir + "/train_metrics.csv";
    csv.save(out.metrics_path);

    out.checkpoint_path = cfg.out_dir + "/checkpoint.ckpt";
    write_checkpoint(out.checkpoint_path, out.checkpoint);
    return out;
}

EvalResult cmd_eval(const RunConfig& cfg, const std::string& checkpoint_path)
{
    cfg.validate();
    const auto ck = read_checkpoint(checkpoint_path);
    const auto ds = read_dataset(cfg.dataset_path(), cfg.system.beta());
    const int users = std::visit([](const auto& p) { return p.users; }, ck.params);
    if (users != cfg.system.num_users || ds.users != users)
        throw DataError("checkpoint (" + std::to_string(users) + " users), dataset (" + std::to_string(ds.users) +
                        ") and config (" + std::to_string(cfg.system.num_users) + ") disagree on the user count");
    if (ck.family() != cfg.model)
        throw DataError("checkpoint family '" + ck.family() + "' does not match model '" + cfg.model + "'");
    if (const auto* h = std::get_if<HybridParams>(&ck.params);
        h != nullptr && (h->qubits() != cfg.n_qubits || h->layers() != cfg.n_layers))
        throw DataError("checkpoint circuit (" + std::to_string(h->qubits()) + " qubits, " +
                        std::to_string(h->layers()) + " layers) does not match the config");
    ensure_directory(cfg.out_dir);

    const int l = cfg.system.num_scheduled;
    EvalResult res;
    res.has_references = binomial(users, l) <= kMaxCombinations && users <= 24;
    auto rng = substream(cfg.system.seed, "eval-stochastic");
    const auto val = ds.val();
    for (std::size_t s = 0; s < val.size(); ++s) {
        const auto& g = val[s];
        const auto logits = std::visit([&](const auto& p) { return forward(p, g).logits; }, ck.params);
        EvalRow row;
        row.sample = ds.n_train + s;
        row.det = sum_rate(g, top_l_select(logits, l));
        std::vector<double> pi(logits.size());
        std::transform(logits.begin(), logits.end(), pi.begin(), sigmoid);
        auto p = sample_policy(pi, 0.0, rng);
        if (cfg.train.budget_projection)
            p = project_to_budget(p, logits, l);
        row.sto = sum_rate(g, p);
        if (res.has_references) {
            row.oracle = exhaustive_best_schedule(g, l).value;
            row.greedy = sum_rate(g, greedy_schedule(g, l));
            row.random_mean = random_schedule_mean(g, l);
        }
        res.rows.push_back(row);
    }
    const auto n = static_cast<double>(res.rows.size());
    for (const auto& r : res.rows) {
        res.mean.det += r.det / n;
        res.mean.sto += r.sto / n;
        res.mean.oracle += r.oracle / n;
        res.mean.greedy += r.greedy / n;
        res.mean.random_mean += r.random_mean / n;
    }

    std::vector<std::string> cols{"sample", "det_reward", "sto_reward"};
    if (res.has_references)
        cols.insert(cols.end(), {"oracle", "greedy", "random_mean"});
    CsvWriter csv("eval", cfg.hash(), cols);
    auto emit = [&](const std::string& label, const EvalRow& r) {
        std::vector<std::string> cells{label, CsvWriter::num(r.det), CsvWriter::num(r.sto)};
        if (res.has_references)
            cells.insert(cells.end(),
                         {CsvWriter::num(r.oracle), CsvWriter::num(r.greedy), CsvWriter::num(r.random_mean)});
        csv.row(cells);
    };
    for (const auto& r : res.rows)
        emit(std::to_string(r.sample), r);
    emit("mean", res.mean);
    res.path = cfg.out_dir + "/eval.csv";
    csv.save(res.path);
    return res;
}

SweepResult cmd_sweep(const RunConfig& cfg, const std::string& axis, const std::vector<double>& values)
{
    cfg.validate();
    if (values.empty())
        throw ConfigError("sweep needs at least one value");
    if (axis != "snr" && axis != "antennas")
        throw ConfigError("sweep axis must be 'snr' or 'antennas'");
    ensure_directory(cfg.out_dir);

    SweepResult res;
    std::vector<double> sorted = values;
    std::sort(sorted.begin(), sorted.end());
    for (double v : sorted) {
        RunConfig point = cfg;
        if (axis == "snr") {
            point.system.snr_db = v;
        } else {
            if (v < 1.0 || v != std::floor(v))
                throw ConfigError("antenna counts must be positive integers");
            point.system.num_antennas = static_cast<int>(v);
        }
        point.validate();
        const int l = point.system.num_scheduled;
        std::vector<double> per_seed;
        for (auto seed : cfg.seeds) {
            // the same seed across points gives common AoDs (common random numbers)
            const auto ds = in_memory_dataset(point, seed);
            const auto val = ds.val();
            double value = 0.0;
            if (cfg.sweep_policy == "oracle")
                value = mean_over(val, [&](const GainMatrix& g) { return exhaustive_best_schedule(g, l).value; });
            else if (cfg.sweep_policy == "greedy")
                value = mean_over(val, [&](const GainMatrix& g) { return sum_rate(g, greedy_schedule(g, l)); });
            else if (cfg.sweep_policy == "random")
                value = mean_over(val, [&](const GainMatrix& g) { return random_schedule_mean(g, l); });
            else
                value = train_family(point, cfg.sweep_policy, point.n_qubits, ds, seed).val_det;
            per_seed.push_back(value);
        }
        SweepRow row;
        row.axis_value = v;
        row.users = point.system.num_users;
        row.antennas = point.system.num_antennas;
        row.snr_db = point.system.snr_db;
        row.qubits = point.n_qubits;
        row.mean_sumrate = std::accumulate(per_seed.begin(), per_seed.end(), 0.0) / static_cast<double>(per_seed.size());
        row.std_sumrate = sample_std(per_seed);
        row.seeds = static_cast<int>(per_seed.size());
        res.rows.push_back(row);
    }

    CsvWriter csv("sweep", cfg.hash(),
                  {"axis_value", "users", "antennas", "snr_db", "qubits", "mean_sumrate", "std_sumrate", "seeds"});
    csv.comment("axis=" + axis + " policy=" + cfg.sweep_policy);
    for (const auto& r : res.rows)
        csv.row({CsvWriter::num(r.axis_value), std::to_string(r.users), std::to_string(r.antennas),
                 CsvWriter::num(r.snr_db), std::to_string(r.qubits), CsvWriter::num(r.mean_sumrate),
                 CsvWriter::num(r.std_sumrate), std::to_string(r.seeds)});
    res.path = cfg.out_dir + "/sweep.csv";
    csv.save(res.path);
    return res;
}

CompareResult cmd_compare(const RunConfig& cfg)
{
    cfg.validate();
    if (cfg.compare_snr_db.empty())
        throw ConfigError("compare_snr_db must list at least one SNR");
    ensure_directory(cfg.out_dir);

    CompareResult res;
    std::vector<double> snrs = cfg.compare_snr_db;
    std::sort(snrs.begin(), snrs.end());
    std::vector<std::uint64_t> seeds = cfg.seeds;
    std::sort(seeds.begin(), seeds.end());
    int wins = 0;
    int cells = 0;
    for (double snr : snrs) {
        RunConfig point = cfg;
        point.system.snr_db = snr;
        point.validate();
        const int l = point.system.num_scheduled;
        CompareSummary sum;
        sum.snr_db = snr;
        for (auto seed : seeds) {
            const auto ds = in_memory_dataset(point, seed);
            const auto hybrid = train_family(point, "hybrid", cfg.compare_qubits, ds, seed);
            const auto cnn = train_family(point, "cnn", cfg.compare_qubits, ds, seed);
            res.hybrid_params = hybrid.parameter_count;
            res.cnn_params = cnn.parameter_count;
            res.rows.push_back({snr, "hybrid", seed, hybrid.val_det});
            res.rows.push_back({snr, "cnn", seed, cnn.val_det});
            const auto n = static_cast<double>(seeds.size());
            sum.hybrid_mean += hybrid.val_det / n;
            sum.cnn_mean += cnn.val_det / n;
            sum.random_mean += mean_over(ds.val(), [&](const GainMatrix& g) { return random_schedule_mean(g, l); }) / n;
            sum.oracle_mean +=
                mean_over(ds.val(), [&](const GainMatrix& g) { return exhaustive_best_schedule(g, l).value; }) / n;
            sum.hybrid_wins += hybrid.val_det >= cnn.val_det ? 1 : 0;
            ++sum.cells;
        }
        wins += sum.hybrid_wins;
        cells += sum.cells;
        res.summary.push_back(sum);
    }
    res.win_fraction = cells > 0 ? static_cast<double>(wins) / cells : 0.0;

    CsvWriter csv("compare", cfg.hash(), {"snr_db", "model", "seed", "val_det_reward"});
    for (const auto& r : res.rows)
        csv.row({CsvWriter::num(r.snr_db), r.model, std::to_string(r.seed), CsvWriter::num(r.val_det)});
    csv.comment("hybrid_qubits=" + std::to_string(cfg.compare_qubits) +
                " hybrid_params=" + std::to_string(res.hybrid_params) + " cnn_params=" + std::to_string(res.cnn_params));
    csv.comment("hybrid_win_cells=" + std::to_string(wins) + "/" + std::to_string(cells) +
                " win_fraction=" + CsvWriter::num(res.win_fraction));
    res.path = cfg.out_dir + "/compare.csv";
    csv.save(res.path);

    CsvWriter summary("compare_summary", cfg.hash(),
                      {"snr_db", "hybrid_mean", "cnn_mean", "random_mean", "oracle_mean", "hybrid_wins", "cells"});
    for (const auto& s : res.summary)
        summary.row({CsvWriter::num(s.snr_db), CsvWriter::num(s.hybrid_mean), CsvWriter::num(s.cnn_mean),
                     CsvWriter::num(s.random_mean), CsvWriter::num(s.oracle_mean), std::to_string(s.hybrid_wins),
                     std::to_string(s.cells)});
    res.summary_path = cfg.out_dir + "/compare_summary.csv";
    summary.save(res.summary_path);
    return res;
}

} // namespace qsched
