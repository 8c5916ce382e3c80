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

#include "qsched/config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace qsched {

std::string format_double(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace {

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& v)
{
    double out = 0.0;
    const auto* end = v.data() + v.size();
    const auto [ptr, ec] = std::from_chars(v.data(), end, out);
    if (ec != std::errc() || ptr != end)
        throw ConfigError("key '" + key + "': expected a real number, got '" + v + "'");
    return out;
}

long long parse_int(const std::string& key, const std::string& v)
{
    long long out = 0;
    const auto* end = v.data() + v.size();
    const auto [ptr, ec] = std::from_chars(v.data(), end, out);
    if (ec != std::errc() || ptr != end)
        throw ConfigError("key '" + key + "': expected an integer, got '" + v + "'");
    return out;
}

int parse_int32(const std::string& key, const std::string& v)
{
    const auto x = parse_int(key, v);
    if (x < -2147483647LL || x > 2147483647LL)
        throw ConfigError("key '" + key + "': integer out of range");
    return static_cast<int>(x);
}

std::uint64_t parse_u64(const std::string& key, const std::string& v)
{
    std::uint64_t out = 0;
    const auto* end = v.data() + v.size();
    const auto [ptr, ec] = std::from_chars(v.data(), end, out);
    if (ec != std::errc() || ptr != end)
        throw ConfigError("key '" + key + "': expected a nonnegative integer, got '" + v + "'");
    return out;
}

bool parse_bool(const std::string& key, const std::string& v)
{
    if (v == "true" || v == "1")
        return true;
    if (v == "false" || v == "0")
        return false;
    throw ConfigError("key '" + key + "': expected true or false, got '" + v + "'");
}

std::vector<std::string> split_list(const std::string& v)
{
    std::vector<std::string> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ','))
        if (auto t = trim(item); !t.empty())
            out.push_back(t);
    return out;
}

template <class T, class F>
std::string join(const std::vector<T>& v, F fmt)
{
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i)
            s += ",";
        s += fmt(v[i]);
    }
    return s;
}

struct Field {
    std::function<void(RunConfig&, const std::string&, const std::string&)> set;
    std::function<std::string(const RunConfig&)> get;
};

#define QS_DOUBLE(name, member)                                                                                         \
    {name, {[](RunConfig& c, const std::string& k, const std::string& v) { c.member = parse_double(k, v); },          \
            [](const RunConfig& c) { return format_double(c.member); }}}
#define QS_INT(name, member)                                                                                            \
    {name, {[](RunConfig& c, const std::string& k, const std::string& v) { c.member = parse_int32(k, v); },           \
            [](const RunConfig& c) { return std::to_string(c.member); }}}
#define QS_BOOL(name, member)                                                                                           \
    {name, {[](RunConfig& c, const std::string& k, const std::string& v) { c.member = parse_bool(k, v); },            \
            [](const RunConfig& c) { return std::string(c.member ? "true" : "false"); }}}
#define QS_STRING(name, member)                                                                                         \
    {name, {[](RunConfig& c, const std::string&, const std::string& v) { c.member = v; },                            \
            [](const RunConfig& c) { return c.member; }}}

const std::vector<std::pair<std::string, Field>>& field_table()
{
    static const std::vector<std::pair<std::string, Field>> table = {
        QS_INT("num_antennas", system.num_antennas),
        QS_INT("num_users", system.num_users),
        QS_INT("num_scheduled", system.num_scheduled),
        QS_DOUBLE("snr_db", system.snr_db),
        QS_DOUBLE("rician_k", system.rician_k),
        {"rician_k_per_user",
         {[](RunConfig& c, const std::string& k, const std::string& v) {
              c.system.rician_k_per_user.clear();
              for (const auto& item : split_list(v))
                  c.system.rician_k_per_user.push_back(parse_double(k, item));
          },
          [](const RunConfig& c) { return join(c.system.rician_k_per_user, format_double); }}},
        QS_DOUBLE("rho", system.rho),
        QS_DOUBLE("aod_range_deg", system.aod_range_deg),
        {"seed",
         {[](RunConfig& c, const std::string& k, const std::string& v) {
              c.system.seed = parse_u64(k, v);
              c.train.seed = c.system.seed;
          },
          [](const RunConfig& c) { return std::to_string(c.system.seed); }}},
        QS_INT("n_qubits", n_qubits),
        QS_INT("n_layers", n_layers),
        QS_INT("n_train", n_train),
        QS_INT("n_val", n_val),
        QS_STRING("model", model),
        QS_INT("epochs", train.epochs),
        QS_INT("batch_size", train.batch_size),
        QS_DOUBLE("learning_rate", train.learning_rate),
        QS_DOUBLE("clip_norm", train.clip_norm),
        QS_DOUBLE("eps_init", train.eps_init),
        QS_DOUBLE("eps_floor", train.eps_floor),
        QS_DOUBLE("eps_decay", train.eps_decay),
        QS_DOUBLE("alpha_max", train.alpha_max),
        QS_DOUBLE("alpha_min", train.alpha_min),
        {"reward_mode",
         {[](RunConfig& c, const std::string&, const std::string& v) { c.train.reward_mode = reward_mode_from_string(v); },
          [](const RunConfig& c) { return to_string(c.train.reward_mode); }}},
        QS_DOUBLE("pf_alpha", train.pf_alpha),
        QS_DOUBLE("pf_epsilon", train.pf_epsilon),
        QS_DOUBLE("adam_beta1", train.adam_beta1),
        QS_DOUBLE("adam_beta2", train.adam_beta2),
        QS_DOUBLE("adam_eps", train.adam_eps),
        QS_BOOL("shuffle", train.shuffle),
        QS_BOOL("budget_projection", train.budget_projection),
        QS_STRING("out_dir", out_dir),
        QS_STRING("dataset", dataset),
        QS_BOOL("record_timing", record_timing),
        {"seeds",
         {[](RunConfig& c, const std::string& k, const std::string& v) {
              c.seeds.clear();
              for (const auto& item : split_list(v))
                  c.seeds.push_back(parse_u64(k, item));
          },
          [](const RunConfig& c) { return join(c.seeds, [](std::uint64_t s) { return std::to_string(s); }); }}},
        QS_STRING("sweep_policy", sweep_policy),
        QS_STRING("sweep_axis", sweep_axis),
        {"sweep_values",
         {[](RunConfig& c, const std::string& k, const std::string& v) {
              c.sweep_values.clear();
              for (const auto& item : split_list(v))
                  c.sweep_values.push_back(parse_double(k, item));
          },
          [](const RunConfig& c) { return join(c.sweep_values, format_double); }}},
        QS_INT("compare_qubits", compare_qubits),
        {"compare_snr_db",
         {[](RunConfig& c, const std::string& k, const std::string& v) {
              c.compare_snr_db.clear();
              for (const auto& item : split_list(v))
                  c.compare_snr_db.push_back(parse_double(k, item));
          },
          [](const RunConfig& c) { return join(c.compare_snr_db, format_double); }}},
    };
    return table;
}

#undef QS_DOUBLE
#undef QS_INT
#undef QS_BOOL
#undef QS_STRING

const Field* find_field(const std::string& key)
{
    for (const auto& [name, field] : field_table())
        if (name == key)
            return &field;
    return nullptr;
}

} // namespace

void RunConfig::set(const std::string& key, const std::string& value)
{
    const auto* f = find_field(key);
    if (f == nullptr)
        throw ConfigError("unknown config key '" + key + "'");
    f->set(*this, key, value);
}

void RunConfig::validate() const
{
    system.validate();
    train.validate();
    if (n_qubits < 1 || n_qubits > kMaxQubits)
        throw ConfigError("n_qubits must lie in [1, " + std::to_string(kMaxQubits) + "]");
    if (compare_qubits < 1 || compare_qubits > kMaxQubits)
        throw ConfigError("compare_qubits must lie in [1, " + std::to_string(kMaxQubits) + "]");
    if (n_layers < 0)
        throw ConfigError("n_layers must be nonnegative");
    if (n_train < 1)
        throw ConfigError("n_train must be positive");
    if (n_val < 1)
        throw ConfigError("n_val must be positive");
    if (model != "hybrid" && model != "cnn")
        throw ConfigError("model must be 'hybrid' or 'cnn', got '" + model + "'");
    if (seeds.empty())
        throw ConfigError("seeds must list at least one seed");
    static const std::vector<std::string> policies{"oracle", "greedy", "random", "hybrid", "cnn"};
    if (std::find(policies.begin(), policies.end(), sweep_policy) == policies.end())
        throw ConfigError("sweep_policy must be one of oracle, greedy, random, hybrid, cnn");
    if (sweep_axis != "snr" && sweep_axis != "antennas")
        throw ConfigError("sweep_axis must be 'snr' or 'antennas'");
    if (out_dir.empty())
        throw ConfigError("out_dir must not be empty");
}

std::string RunConfig::echo(bool include_paths) const
{
    std::string s;
    for (const auto& [name, field] : field_table()) {
        if (!include_paths && (name == "out_dir" || name == "dataset"))
            continue;
        s += name + " = " + field.get(*this) + "\n";
    }
    return s;
}

std::string RunConfig::hash() const
{
    std::uint64_t h = hash_tag(echo());
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string RunConfig::dataset_path() const
{
    return dataset.empty() ? out_dir + "/dataset.qsd" : dataset;
}

const std::vector<std::string>& RunConfig::keys()
{
    static const std::vector<std::string> k = [] {
        std::vector<std::string> out;
        for (const auto& [name, field] : field_table())
            out.push_back(name);
        return out;
    }();
    return k;
}

RunConfig parse_config(const std::string& text)
{
    RunConfig cfg;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto t = trim(line);
        if (t.empty() || t[0] == '#')
            continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
        const auto key = trim(t.substr(0, eq));
        const auto value = trim(t.substr(eq + 1));
        try {
            cfg.set(key, value);
        } catch (const ConfigError& e) {
            throw ConfigError("line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return cfg;
}

RunConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot read config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

} // namespace qsched
