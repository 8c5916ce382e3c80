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

#include "qsched/io.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

namespace qsched {

static_assert(std::endian::native == std::endian::little, "on-disk formats assume a little-endian host");

namespace {

constexpr char kDatasetMagic[8] = {'Q', 'S', 'C', 'H', 'D', 'S', '0', '1'};

template <class T>
void put(std::ostream& out, T v)
{
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
T get(std::istream& in, const std::string& what)
{
    T v{};
    if (!in.read(reinterpret_cast<char*>(&v), sizeof v))
        throw DataError("truncated file while reading " + what);
    return v;
}

std::string blob_path_for(const std::string& manifest_path)
{
    std::filesystem::path p(manifest_path);
    p.replace_extension(".bin");
    return p.string();
}

std::map<std::string, std::string> parse_manifest(const std::string& text)
{
    std::map<std::string, std::string> kv;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#')
            continue;
        const auto eq = line.find(" = ");
        if (eq == std::string::npos)
            throw DataError("malformed checkpoint manifest line: " + line);
        kv[line.substr(0, eq)] = line.substr(eq + 3);
    }
    return kv;
}

const std::string& need(const std::map<std::string, std::string>& kv, const std::string& key)
{
    const auto it = kv.find(key);
    if (it == kv.end())
        throw DataError("checkpoint manifest is missing '" + key + "'");
    return it->second;
}

int need_int(const std::map<std::string, std::string>& kv, const std::string& key)
{
    try {
        return std::stoi(need(kv, key));
    } catch (const std::logic_error&) {
        throw DataError("checkpoint manifest key '" + key + "' is not an integer");
    }
}

double need_double(const std::map<std::string, std::string>& kv, const std::string& key)
{
    try {
        return std::stod(need(kv, key));
    } catch (const std::logic_error&) {
        throw DataError("checkpoint manifest key '" + key + "' is not a number");
    }
}

} // namespace

Dataset generate_dataset(const RunConfig& cfg)
{
    Dataset ds;
    ds.header = cfg.echo();
    ds.users = cfg.system.num_users;
    ds.n_train = static_cast<std::size_t>(cfg.n_train);
    const auto n = static_cast<std::size_t>(cfg.n_train + cfg.n_val);
    for (std::size_t i = 0; i < n; ++i) {
        auto s = generate_sample(cfg.system, i);
        ds.indices.push_back(i);
        ds.aods.push_back(std::move(s.aods));
        ds.samples.push_back(std::move(s.gains));
    }
    return ds;
}

void write_dataset(const std::string& path, const Dataset& ds)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw DataError("cannot write dataset '" + path + "'");
    out.write(kDatasetMagic, sizeof kDatasetMagic);
    put<std::uint32_t>(out, kDatasetVersion);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(ds.header.size()));
    out.write(ds.header.data(), static_cast<std::streamsize>(ds.header.size()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(ds.users));
    put<std::uint64_t>(out, ds.samples.size());
    put<std::uint64_t>(out, ds.n_train);
    const auto k = static_cast<Eigen::Index>(ds.users);
    for (std::size_t s = 0; s < ds.samples.size(); ++s) {
        put<std::uint64_t>(out, ds.indices[s]);
        for (double a : ds.aods[s])
            put<double>(out, a);
        for (Eigen::Index r = 0; r < k; ++r)
            for (Eigen::Index c = 0; c < k; ++c)
                put<double>(out, ds.samples[s].g(r, c));
    }
    if (!out)
        throw DataError("write failed for dataset '" + path + "'");
}

Dataset read_dataset(const std::string& path, double beta)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw DataError("cannot open dataset '" + path + "'");
    char magic[8];
    if (!in.read(magic, sizeof magic) || std::memcmp(magic, kDatasetMagic, sizeof magic) != 0)
        throw DataError("'" + path + "' is not a qsched dataset");
    const auto version = get<std::uint32_t>(in, "version");
    if (version != kDatasetVersion)
        throw DataError("unsupported dataset version " + std::to_string(version));
    const auto header_len = get<std::uint32_t>(in, "header length");
    Dataset ds;
    ds.header.resize(header_len);
    if (!in.read(ds.header.data(), header_len))
        throw DataError("truncated dataset header");
    ds.users = static_cast<int>(get<std::uint32_t>(in, "user count"));
    const auto n = get<std::uint64_t>(in, "sample count");
    ds.n_train = get<std::uint64_t>(in, "training split");
    if (ds.users < 1 || ds.n_train > n)
        throw DataError("inconsistent dataset header");
    const auto k = static_cast<Eigen::Index>(ds.users);
    for (std::uint64_t s = 0; s < n; ++s) {
        ds.indices.push_back(get<std::uint64_t>(in, "sample index"));
        std::vector<double> aods(static_cast<std::size_t>(k));
        for (auto& a : aods)
            a = get<double>(in, "angle of departure");
        ds.aods.push_back(std::move(aods));
        GainMatrix g;
        g.g.resize(k, k);
        for (Eigen::Index r = 0; r < k; ++r)
            for (Eigen::Index c = 0; c < k; ++c)
                g.g(r, c) = get<double>(in, "gain entry");
        g.beta = Eigen::VectorXd::Constant(k, beta);
        ds.samples.push_back(std::move(g));
    }
    return ds;
}

std::string Checkpoint::family() const
{
    return std::holds_alternative<HybridParams>(params) ? HybridParams::family : CnnParams::family;
}

void write_checkpoint(const std::string& manifest_path, const Checkpoint& ckpt)
{
    std::ostringstream m;
    m << "# qsched checkpoint manifest\n";
    m << "format = qsched-checkpoint\n";
    m << "version = " << kCheckpointVersion << "\n";
    m << "family = " << ckpt.family() << "\n";

    std::vector<std::span<const double>> blocks;
    Normalizer norm;
    std::visit(
        [&](const auto& p) {
            blocks = p.blocks();
            norm = p.norm;
            m << "users = " << p.users << "\n";
        },
        ckpt.params);
    if (const auto* h = std::get_if<HybridParams>(&ckpt.params)) {
        m << "qubits = " << h->qubits() << "\n";
        m << "layers = " << h->layers() << "\n";
    } else {
        m << "filters = " << CnnParams::kFilters << "\n";
    }
    std::size_t count = 0;
    for (auto b : blocks)
        count += b.size();
    m << "norm_mu = " << format_double(norm.mu) << "\n";
    m << "norm_sigma = " << format_double(norm.sigma) << "\n";
    m << "param_count = " << count << "\n";
    m << "epoch = " << ckpt.epoch << "\n";
    m << "config_hash = " << ckpt.config_hash << "\n";
    m << "optimizer_step = " << ckpt.optimizer.step << "\n";
    m << "blob = " << std::filesystem::path(blob_path_for(manifest_path)).filename().string() << "\n";
    m << "metrics_count = " << ckpt.history.size() << "\n";
    for (std::size_t i = 0; i < ckpt.history.size(); ++i) {
        const auto& e = ckpt.history[i];
        m << "metrics." << i << " = " << e.epoch << "," << format_double(e.mean_loss) << ","
          << format_double(e.mean_reward) << "," << format_double(e.val_det) << "," << format_double(e.val_sto) << ","
          << format_double(e.epsilon) << "," << format_double(e.alpha) << "," << format_double(e.seconds) << ","
          << (e.aborted ? 1 : 0) << "\n";
    }

    {
        std::ofstream out(manifest_path, std::ios::trunc);
        if (!out)
            throw DataError("cannot write checkpoint manifest '" + manifest_path + "'");
        out << m.str();
    }

    std::ofstream blob(blob_path_for(manifest_path), std::ios::binary | std::ios::trunc);
    if (!blob)
        throw DataError("cannot write checkpoint blob for '" + manifest_path + "'");
    for (auto b : blocks)
        for (double x : b)
            put<double>(blob, x);
    if (ckpt.optimizer.step > 0) {
        for (const auto& v : ckpt.optimizer.m)
            for (double x : v)
                put<double>(blob, x);
        for (const auto& v : ckpt.optimizer.v)
            for (double x : v)
                put<double>(blob, x);
    }
}

Checkpoint read_checkpoint(const std::string& manifest_path)
{
    const auto kv = parse_manifest(read_file(manifest_path));
    if (need(kv, "format") != "qsched-checkpoint")
        throw DataError("'" + manifest_path + "' is not a qsched checkpoint");
    if (need_int(kv, "version") != kCheckpointVersion)
        throw DataError("unsupported checkpoint version");

    Checkpoint ck;
    const auto family = need(kv, "family");
    const int users = need_int(kv, "users");
    if (users < 1)
        throw DataError("checkpoint user count must be positive");
    if (family == HybridParams::family) {
        const int qubits = need_int(kv, "qubits");
        const int layers = need_int(kv, "layers");
        if (qubits < 1 || qubits > kMaxQubits || layers < 0)
            throw DataError("checkpoint circuit shape out of range");
        ck.params = HybridParams::zeros(users, qubits, layers);
    } else if (family == CnnParams::family) {
        ck.params = CnnParams::zeros(users);
    } else {
        throw DataError("unknown model family '" + family + "' in checkpoint");
    }
    ck.epoch = need_int(kv, "epoch");
    ck.config_hash = need(kv, "config_hash");
    ck.optimizer.step = need_int(kv, "optimizer_step");

    Normalizer norm{need_double(kv, "norm_mu"), need_double(kv, "norm_sigma")};
    std::vector<std::span<double>> blocks;
    std::visit(
        [&](auto& p) {
            p.norm = norm;
            blocks = p.blocks();
        },
        ck.params);
    std::size_t count = 0;
    for (auto b : blocks)
        count += b.size();
    if (static_cast<std::size_t>(need_int(kv, "param_count")) != count)
        throw DataError("checkpoint parameter count does not match its declared shapes");

    std::ifstream blob(blob_path_for(manifest_path), std::ios::binary);
    if (!blob)
        throw DataError("cannot open checkpoint blob for '" + manifest_path + "'");
    for (auto b : blocks)
        for (auto& x : b)
            x = get<double>(blob, "parameter");
    if (ck.optimizer.step > 0) {
        for (auto b : blocks) {
            ck.optimizer.m.emplace_back(b.size());
            for (auto& x : ck.optimizer.m.back())
                x = get<double>(blob, "optimizer moment");
        }
        for (auto b : blocks) {
            ck.optimizer.v.emplace_back(b.size());
            for (auto& x : ck.optimizer.v.back())
                x = get<double>(blob, "optimizer moment");
        }
    }

    const int n_metrics = need_int(kv, "metrics_count");
    for (int i = 0; i < n_metrics; ++i) {
        std::istringstream row(need(kv, "metrics." + std::to_string(i)));
        std::string cell;
        std::vector<std::string> cells;
        while (std::getline(row, cell, ','))
            cells.push_back(cell);
        if (cells.size() != 9)
            throw DataError("malformed metrics row " + std::to_string(i) + " in checkpoint");
        EpochMetrics e;
        e.epoch = std::stoi(cells[0]);
        e.mean_loss = std::stod(cells[1]);
        e.mean_reward = std::stod(cells[2]);
        e.val_det = std::stod(cells[3]);
        e.val_sto = std::stod(cells[4]);
        e.epsilon = std::stod(cells[5]);
        e.alpha = std::stod(cells[6]);
        e.seconds = std::stod(cells[7]);
        e.aborted = cells[8] == "1";
        ck.history.push_back(e);
    }
    return ck;
}

CsvWriter::CsvWriter(std::string kind, std::string config_hash, std::vector<std::string> columns)
    : columns_(columns.size())
{
    out_ = "# qsched " + kind + " format=" + std::to_string(kCsvVersion) + " config_hash=" + config_hash + "\n";
    row(columns);
}

void CsvWriter::row(const std::vector<std::string>& cells)
{
    if (cells.size() != columns_)
        throw std::logic_error("CsvWriter: row has the wrong number of cells");
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i)
            out_ += ',';
        out_ += cells[i];
    }
    out_ += '\n';
}

void CsvWriter::comment(const std::string& text)
{
    out_ += "# " + text + "\n";
}

void CsvWriter::save(const std::string& path) const
{
    std::ofstream out(path, std::ios::trunc);
    if (!out)
        throw DataError("cannot write '" + path + "'");
    out << out_;
}

std::string CsvWriter::num(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

void ensure_directory(const std::string& dir)
{
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec)
        throw DataError("cannot create directory '" + dir + "': " + ec.message());
}

std::string read_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw DataError("cannot read '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace qsched
