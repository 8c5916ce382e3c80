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

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumerical = 4;

struct CommonFlags {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out_dir;
    std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, CommonFlags& f)
{
    cmd->add_option("--config", f.config_path, "key = value config file");
    cmd->add_option("--seed", f.seed, "master seed");
    cmd->add_option("--out", f.out_dir, "output directory");
    cmd->add_option("--set", f.overrides, "override a config key (key=value), repeatable");
}

qsched::RunConfig resolve(const CommonFlags& f)
{
    auto cfg = f.config_path.empty() ? qsched::RunConfig{} : qsched::load_config(f.config_path);
    for (const auto& kv : f.overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos)
            throw qsched::ConfigError("--set expects key=value, got '" + kv + "'");
        cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (f.seed)
        cfg.set("seed", std::to_string(*f.seed));
    if (!f.out_dir.empty())
        cfg.out_dir = f.out_dir;
    cfg.validate();
    return cfg;
}

std::string fmt(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"qsched: learned user scheduling for massive-MIMO downlink"};
    app.require_subcommand(1);

    CommonFlags gen_f, train_f, eval_f, sweep_f, compare_f;
    std::string model;
    std::string checkpoint;
    std::string axis;
    std::vector<double> values;

    auto* gen = app.add_subcommand("gen", "generate a dataset of gain matrices");
    add_common(gen, gen_f);

    auto* train = app.add_subcommand("train", "train a scheduling policy on a dataset");
    add_common(train, train_f);
    train->add_option("--model", model, "model family")->check(CLI::IsMember({"hybrid", "cnn"}));

    auto* eval = app.add_subcommand("eval", "evaluate a checkpoint against reference schedulers");
    add_common(eval, eval_f);
    eval->add_option("--model", model, "model family")->check(CLI::IsMember({"hybrid", "cnn"}));
    eval->add_option("--checkpoint", checkpoint, "checkpoint manifest (default <out>/checkpoint.ckpt)");

    auto* sweep = app.add_subcommand("sweep", "sum rate across SNR or antenna count");
    add_common(sweep, sweep_f);
    sweep->add_option("--axis", axis, "sweep axis")->check(CLI::IsMember({"snr", "antennas"}));
    sweep->add_option("--values", values, "axis values")->delimiter(',');

    auto* compare = app.add_subcommand("compare", "hybrid versus CNN across SNR and seeds");
    add_common(compare, compare_f);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*gen) {
            const auto cfg = resolve(gen_f);
            const auto res = qsched::cmd_gen(cfg);
            std::cout << "wrote " << res.dataset.samples.size() << " samples (" << res.dataset.n_train
                      << " train) to " << res.path << "\n";
        } else if (*train) {
            auto cfg = resolve(train_f);
            if (!model.empty()) {
                cfg.model = model;
                cfg.validate();
            }
            const auto res = qsched::cmd_train(cfg);
            for (const auto& d : res.diagnostics)
                std::cerr << "warning: " << d << "\n";
            std::cout << "best epoch " << res.checkpoint.epoch << " val_det " << fmt(res.best_val_det) << "\n"
                      << "wrote " << res.metrics_path << " and " << res.checkpoint_path << "\n";
        } else if (*eval) {
            auto cfg = resolve(eval_f);
            if (!model.empty())
                cfg.model = model;
            const auto path = checkpoint.empty() ? cfg.out_dir + "/checkpoint.ckpt" : checkpoint;
            const auto res = qsched::cmd_eval(cfg, path);
            std::cout << "det " << fmt(res.mean.det) << " sto " << fmt(res.mean.sto);
            if (res.has_references)
                std::cout << " oracle " << fmt(res.mean.oracle) << " greedy " << fmt(res.mean.greedy) << " random "
                          << fmt(res.mean.random_mean);
            std::cout << "\nwrote " << res.path << "\n";
        } else if (*sweep) {
            const auto cfg = resolve(sweep_f);
            const auto res =
                qsched::cmd_sweep(cfg, axis.empty() ? cfg.sweep_axis : axis, values.empty() ? cfg.sweep_values : values);
            for (const auto& r : res.rows)
                std::cout << r.axis_value << ": " << fmt(r.mean_sumrate) << " +/- " << fmt(r.std_sumrate) << "\n";
            std::cout << "wrote " << res.path << "\n";
        } else if (*compare) {
            const auto cfg = resolve(compare_f);
            const auto res = qsched::cmd_compare(cfg);
            for (const auto& s : res.summary)
                std::cout << "snr " << s.snr_db << ": hybrid " << fmt(s.hybrid_mean) << " cnn " << fmt(s.cnn_mean)
                          << " random " << fmt(s.random_mean) << " oracle " << fmt(s.oracle_mean) << "\n";
            std::cout << "hybrid >= cnn in " << fmt(res.win_fraction) << " of cells\n"
                      << "wrote " << res.path << " and " << res.summary_path << "\n";
        }
    } catch (const qsched::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const qsched::DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const qsched::NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    }
    return 0;
}
