#include "gdl/teacher.hpp"

#include "gdl/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>

namespace gdl::teacher {

using nlohmann::json;

LogitSequence TeacherModel::forward_sequence(std::span<const int> x) const {
    LogitSequence out;
    out.reserve(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        out.push_back(logits(x.first(i)));
    }
    return out;
}

// ---------------------------------------------------------------- tabular

TabularTeacher::TabularTeacher(int vocab, std::map<TokenSequence, ProbVector> table)
    : vocab_(vocab), table_(std::move(table)) {
    if (vocab_ < 1) {
        throw ContractError("tabular teacher: vocabulary must be nonempty");
    }
    for (const auto &[prefix, p] : table_) {
        if (p.size() != static_cast<std::size_t>(vocab_)) {
            throw ContractError("tabular teacher: probability row has wrong length");
        }
        const double s = std::accumulate(p.values().begin(), p.values().end(), 0.0);
        if (std::abs(s - 1.0) > 1e-9) {
            throw ContractError("tabular teacher: probability row does not sum to 1");
        }
    }
}

TabularTeacher TabularTeacher::from_corpus(const std::vector<TokenSequence> &corpus, double eps, int vocab) {
    if (corpus.empty()) {
        throw ContractError("tabular teacher: empty corpus");
    }
    if (!(eps >= 0.0 && eps <= 0.1)) {
        throw ContractError("tabular teacher: smoothing must lie in [0, 0.1]");
    }
    std::map<TokenSequence, std::vector<double>> counts;
    for (const auto &seq : corpus) {
        TokenSequence prefix;
        for (const int tok : seq) {
            if (tok < 0 || tok >= vocab) {
                throw ContractError("tabular teacher: token out of range");
            }
            auto &row = counts[prefix];
            row.resize(static_cast<std::size_t>(vocab), 0.0);
            row[static_cast<std::size_t>(tok)] += 1.0;
            prefix.push_back(tok);
        }
    }
    std::map<TokenSequence, ProbVector> table;
    for (auto &[prefix, row] : counts) {
        const double total = std::accumulate(row.begin(), row.end(), 0.0);
        std::vector<double> p(row.size());
        for (std::size_t k = 0; k < row.size(); ++k) {
            p[k] = (1.0 - eps) * row[k] / total + eps / vocab;
        }
        table.emplace(prefix, ProbVector(std::move(p)));
    }
    return TabularTeacher(vocab, std::move(table));
}

bool TabularTeacher::knows(std::span<const int> prefix) const {
    return table_.find(TokenSequence(prefix.begin(), prefix.end())) != table_.end();
}

ProbVector TabularTeacher::probs(std::span<const int> prefix) const {
    const auto it = table_.find(TokenSequence(prefix.begin(), prefix.end()));
    if (it == table_.end()) {
        return ProbVector(static_cast<std::size_t>(vocab_), 1.0 / vocab_);
    }
    return it->second;
}

LogitVector TabularTeacher::logits(std::span<const int> prefix) const { return log_probs(probs(prefix)); }

void TabularTeacher::save_ndjson(const std::string &path) const {
    std::ofstream out(path);
    if (!out) {
        throw ConfigError("cannot write " + path);
    }
    for (const auto &[prefix, p] : table_) {
        out << json{{"prefix", prefix}, {"probs", p.values()}}.dump() << '\n';
    }
}

TabularTeacher TabularTeacher::load_ndjson(const std::string &path, int vocab) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open " + path);
    }
    std::map<TokenSequence, ProbVector> table;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) {
            continue;
        }
        try {
            const json j = json::parse(line);
            table.emplace(j.at("prefix").get<TokenSequence>(), ProbVector(j.at("probs").get<std::vector<double>>()));
        } catch (const json::exception &e) {
            throw ConfigError(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return TabularTeacher(vocab, std::move(table));
}

// ---------------------------------------------------------------- neural

NeuralTeacher::NeuralTeacher(nn::ArchitectureConfig arch, int first_token) : net_(arch), first_token_(first_token) {
    if (!arch.causal) {
        throw ConfigError("neural teacher: architecture must be causal");
    }
    if (arch.vocab_in != arch.vocab_out || arch.cond_dim != 0) {
        throw ConfigError("neural teacher: needs vocab_in == vocab_out and no condition projection");
    }
    if (first_token < 0 || first_token >= arch.vocab_out) {
        throw ConfigError("neural teacher: first token out of range");
    }
}

nn::ArchitectureConfig NeuralTeacher::default_architecture(int vocab, int max_len) {
    nn::ArchitectureConfig a;
    a.vocab_in = vocab;
    a.vocab_out = vocab;
    a.n_max = max_len - 1;
    a.d_model = 64;
    a.layers = 2;
    a.heads = 2;
    a.mlp_ratio = 4;
    a.causal = true;
    return a;
}

LogitVector NeuralTeacher::first_logits() const {
    LogitVector l(static_cast<std::size_t>(vocab_size()), kLogZero);
    l[static_cast<std::size_t>(first_token_)] = 0.0;
    return l;
}

LogitVector NeuralTeacher::logits(std::span<const int> prefix) const {
    if (prefix.empty()) {
        return first_logits();
    }
    nn::InputBatch in;
    in.batch = 1;
    in.length = prefix.size();
    in.tokens.assign(prefix.begin(), prefix.end());
    const auto fwd = net_.forward(in);
    const auto V = static_cast<std::size_t>(vocab_size());
    const auto last = fwd.logits.begin() + static_cast<std::ptrdiff_t>((prefix.size() - 1) * V);
    return LogitVector(std::vector<double>(last, last + static_cast<std::ptrdiff_t>(V)));
}

LogitSequence NeuralTeacher::forward_sequence(std::span<const int> x) const {
    LogitSequence out;
    if (x.empty()) {
        return out;
    }
    out.push_back(first_logits());
    if (x.size() == 1) {
        return out;
    }
    nn::InputBatch in;
    in.batch = 1;
    in.length = x.size() - 1;
    in.tokens.assign(x.begin(), x.end() - 1);
    const auto fwd = net_.forward(in);
    const auto V = static_cast<std::size_t>(vocab_size());
    for (std::size_t i = 0; i + 1 < x.size(); ++i) {
        const auto row = fwd.logits.begin() + static_cast<std::ptrdiff_t>(i * V);
        out.emplace_back(std::vector<double>(row, row + static_cast<std::ptrdiff_t>(V)));
    }
    return out;
}

std::vector<double> NeuralTeacher::hidden_states(std::span<const int> x) const {
    nn::InputBatch in;
    in.batch = 1;
    in.length = x.size();
    in.tokens.assign(x.begin(), x.end());
    return net_.forward(in).hidden;
}

nn::Checkpoint NeuralTeacher::to_checkpoint(const json &extra) const {
    nn::Checkpoint ckpt;
    ckpt.meta = extra.is_object() ? extra : json::object();
    ckpt.meta["kind"] = "neural-teacher";
    ckpt.meta["architecture"] = net_.config().to_json();
    ckpt.meta["first_token"] = first_token_;
    ckpt.params = net_.params();
    return ckpt;
}

NeuralTeacher NeuralTeacher::from_checkpoint(const nn::Checkpoint &ckpt) {
    if (ckpt.meta.value("kind", std::string()) != "neural-teacher") {
        throw ConfigError("checkpoint does not hold a neural teacher");
    }
    NeuralTeacher t(nn::ArchitectureConfig::from_json(ckpt.meta.at("architecture")),
                    ckpt.meta.value("first_token", 0));
    if (!t.net_.params().same_layout(ckpt.params)) {
        throw ConfigError("neural teacher checkpoint tensors do not match its architecture");
    }
    t.net_.params() = ckpt.params;
    return t;
}

namespace {

void fill_lm_batch(const std::vector<TokenSequence> &corpus, std::span<const std::size_t> idx, std::size_t length,
                   nn::InputBatch &in, nn::TargetBatch &tg) {
    in.batch = idx.size();
    in.length = length;
    in.tokens.clear();
    tg.targets.clear();
    for (const std::size_t s : idx) {
        const auto &seq = corpus[s];
        for (std::size_t i = 0; i < length; ++i) {
            in.tokens.push_back(seq[i]);
            tg.targets.push_back(seq[i + 1]);
        }
    }
}

} // namespace

NeuralTrainResult neural_teacher_train(const std::vector<TokenSequence> &corpus, const NeuralTrainConfig &config) {
    if (corpus.empty()) {
        throw ContractError("neural teacher: empty corpus");
    }
    if (config.epochs < 1 || config.batch_size < 1) {
        throw ConfigError("neural teacher: epochs and batch_size must be positive");
    }
    const std::size_t n = corpus.front().size();
    if (n < 2 || n - 1 > static_cast<std::size_t>(config.arch.n_max)) {
        throw ConfigError("neural teacher: sequence length does not fit the architecture");
    }
    for (const auto &s : corpus) {
        if (s.size() != n) {
            throw ContractError("neural teacher: corpus sequences must share one length");
        }
    }
    NeuralTeacher model(config.arch, config.first_token);
    model.network().init(stream_seed(config.seed, {name_key("init"), name_key("teacher")}));

    nn::InputBatch in;
    nn::TargetBatch tg;
    std::vector<std::size_t> all(corpus.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    fill_lm_batch(corpus, all, n - 1, in, tg);
    const double initial = model.network().loss(in, tg);

    nn::ParamSet grads;
    nn::AdamState state;
    std::vector<EpochLog> log;
    long step = 0;
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<std::size_t> order = all;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        Rng rng = Rng::stream(config.seed, {name_key("train"), name_key("teacher-shuffle"),
                                            static_cast<std::uint64_t>(epoch)});
        for (std::size_t i = order.size(); i > 1; --i) {
            std::swap(order[i - 1], order[rng.below(i)]);
        }
        double sum = 0.0;
        std::size_t batches = 0;
        for (std::size_t b0 = 0; b0 < order.size(); b0 += static_cast<std::size_t>(config.batch_size)) {
            const std::size_t b1 = std::min(order.size(), b0 + static_cast<std::size_t>(config.batch_size));
            fill_lm_batch(corpus, std::span(order).subspan(b0, b1 - b0), n - 1, in, tg);
            sum += model.network().loss_and_grad(in, tg, grads);
            nn::adam_step(model.network().params(), grads, state, config.adam);
            ++step;
            ++batches;
        }
        const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        log.push_back({epoch, step, sum / static_cast<double>(batches), config.adam.lr, ms});
    }
    return {std::move(model), std::move(log), initial};
}

TokenSequence teacher_sample(const TeacherModel &teacher, std::size_t max_len, Rng &rng, int stop_token) {
    if (max_len < 1) {
        throw ContractError("teacher_sample: max_len must be positive");
    }
    TokenSequence x;
    while (x.size() < max_len) {
        const auto draw = sample_categorical(teacher.logits(x), rng);
        x.push_back(static_cast<int>(draw.token));
        if (x.size() > 1 && x.back() == stop_token) {
            break;
        }
    }
    return x;
}

} // namespace gdl::teacher
