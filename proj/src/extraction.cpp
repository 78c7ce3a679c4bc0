#include "gdl/extraction.hpp"

#include "gdl/errors.hpp"
#include "gdl/parallel.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>

namespace gdl::extraction {

Extracted sequential_extract(const teacher::TeacherModel &teacher, std::size_t max_len, Rng &rng, int stop_token) {
    Extracted out;
    const auto V = static_cast<std::size_t>(teacher.vocab_size());
    while (out.tokens.size() < max_len) {
        const LogitVector l = teacher.logits(out.tokens);
        GumbelVector xi = sample_gumbel(rng, V);
        const auto tok = static_cast<int>(gumbel_max(l, xi));
        out.tokens.push_back(tok);
        out.noise.push_back(std::move(xi));
        if (stop_token >= 0 && out.tokens.size() > 1 && tok == stop_token) {
            break;
        }
    }
    return out;
}

GumbelSequence parallel_extract(const teacher::TeacherModel &teacher, std::span<const int> x, ExtractionStream stream,
                                PosteriorVariant variant) {
    const teacher::LogitSequence logits = teacher.forward_sequence(x);
    GumbelSequence out;
    out.reserve(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const ProbVector p = softmax(logits[i]);
        if (x[i] < 0 || static_cast<std::size_t>(x[i]) >= p.size()) {
            throw ContractError("parallel_extract: token out of range at position " + std::to_string(i));
        }
        if (p[static_cast<std::size_t>(x[i])] <= 0.0) {
            throw ConditioningError("parallel_extract: token " + std::to_string(x[i]) + " at position " +
                                        std::to_string(i) + " has zero teacher probability",
                                    i);
        }
        Rng rng = Rng::stream(stream.seed, {name_key("extract"), stream.sequence_id, static_cast<std::uint64_t>(i)});
        out.push_back(posterior_gumbel(p, static_cast<std::size_t>(x[i]), rng, variant));
    }
    return out;
}

std::vector<GumbelSequence> parallel_extract_all(const teacher::TeacherModel &teacher,
                                                 const std::vector<TokenSequence> &corpus, std::uint64_t seed,
                                                 std::uint64_t id_base) {
    std::vector<GumbelSequence> out(corpus.size());
    parallel_for(corpus.size(), [&](std::size_t s) {
        out[s] = parallel_extract(teacher, corpus[s], {seed, id_base + s});
    });
    return out;
}

TokenSequence replay(const teacher::TeacherModel &teacher, const GumbelSequence &noise) {
    TokenSequence x;
    x.reserve(noise.size());
    for (const auto &xi : noise) {
        x.push_back(static_cast<int>(gumbel_max(teacher.logits(x), xi)));
    }
    return x;
}

DistillationTriplet make_triplet(std::span<const int> x, const GumbelSequence &noise, const MaskRule &rule,
                                 int mask_token, Rng &rng) {
    const std::size_t n = x.size();
    if (n == 0) {
        throw ContractError("make_triplet: empty sequence");
    }
    if (!noise.empty() && noise.size() != n) {
        throw ContractError("make_triplet: noise and tokens are not aligned");
    }
    if (rule.forced_t && !(*rule.forced_t > 0.0 && *rule.forced_t <= 1.0)) {
        throw ContractError("make_triplet: forced t must lie in (0, 1]");
    }
    std::size_t lo = 0;
    std::size_t hi = n;
    if (rule.kind == MaskKind::block) {
        if (rule.block_size == 0 || n % rule.block_size != 0) {
            throw ContractError("make_triplet: block size must divide the sequence length");
        }
        const std::size_t blocks = n / rule.block_size;
        lo = rng.below(blocks) * rule.block_size;
        hi = lo + rule.block_size;
    }
    DistillationTriplet tr;
    tr.n = n;
    do {
        tr.t = rule.forced_t ? *rule.forced_t : 1.0 - rng.uniform01();
        tr.positions.clear();
        for (std::size_t i = lo; i < hi; ++i) {
            if (rng.uniform01() < tr.t) {
                tr.positions.push_back(i);
            }
        }
        // a fixed t cannot be redrawn, so an empty draw masks one position
        if (tr.positions.empty() && rule.forced_t) {
            tr.positions.push_back(lo + rng.below(hi - lo));
        }
    } while (tr.positions.empty());

    tr.context.assign(x.begin(), x.end());
    for (std::size_t i = hi; i < n; ++i) {
        tr.context[i] = mask_token;
    }
    for (const std::size_t i : tr.positions) {
        tr.context[i] = mask_token;
        tr.targets.push_back(x[i]);
        if (!noise.empty()) {
            tr.noise.push_back(noise[i]);
        }
    }
    return tr;
}

namespace {

void append_double(std::string &out, double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out += buf;
}

} // namespace

std::string to_ndjson(const Extracted &record) {
    std::string out = "{\"tokens\":[";
    for (std::size_t i = 0; i < record.tokens.size(); ++i) {
        if (i > 0) {
            out += ',';
        }
        out += std::to_string(record.tokens[i]);
    }
    out += "],\"gumbel\":[";
    for (std::size_t i = 0; i < record.noise.size(); ++i) {
        out += i > 0 ? ",[" : "[";
        const auto &xi = record.noise[i];
        for (std::size_t k = 0; k < xi.size(); ++k) {
            if (k > 0) {
                out += ',';
            }
            append_double(out, xi[k]);
        }
        out += ']';
    }
    out += "]}";
    return out;
}

Extracted from_ndjson(const std::string &line) {
    try {
        const auto j = nlohmann::json::parse(line);
        Extracted r;
        r.tokens = j.at("tokens").get<TokenSequence>();
        for (const auto &row : j.at("gumbel")) {
            r.noise.emplace_back(row.get<std::vector<double>>());
        }
        if (r.noise.size() != r.tokens.size()) {
            throw ConfigError("noise record: tokens and gumbel lengths differ");
        }
        for (const auto &xi : r.noise) {
            if (xi.size() != r.noise.front().size()) {
                throw ConfigError("noise record: ragged gumbel rows");
            }
        }
        return r;
    } catch (const nlohmann::json::exception &e) {
        throw ConfigError(std::string("noise record: ") + e.what());
    }
}

void save_ndjson(const std::string &path, const std::vector<Extracted> &records) {
    std::ofstream out(path);
    if (!out) {
        throw ConfigError("cannot write " + path);
    }
    for (const auto &r : records) {
        out << to_ndjson(r) << '\n';
    }
}

std::vector<Extracted> load_ndjson(const std::string &path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open " + path);
    }
    std::vector<Extracted> out;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty()) {
            out.push_back(from_ndjson(line));
        }
    }
    return out;
}

} // namespace gdl::extraction
