#include "gdl/maze.hpp"

#include "gdl/errors.hpp"
#include "gdl/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <deque>
#include <fstream>
#include <numeric>
#include <sstream>

namespace gdl::maze {

using nlohmann::json;

namespace {

std::pair<Cell, Cell> edge(Cell a, Cell b) { return a < b ? std::pair{a, b} : std::pair{b, a}; }

bool adjacent(Cell a, Cell b) { return std::abs(a.row - b.row) + std::abs(a.col - b.col) == 1; }

Cell parse_cell(const json &j) {
    if (!j.is_array() || j.size() != 2) {
        throw ConfigError("maze spec: a cell must be [row, col]");
    }
    return {j.at(0).get<int>(), j.at(1).get<int>()};
}

} // namespace

bool MazeSpec::blocked(Cell a, Cell b) const { return walls.count(edge(a, b)) > 0; }

void MazeSpec::add_wall(Cell a, Cell b) { walls.insert(edge(a, b)); }

void MazeSpec::validate() const {
    if (rows < 1 || cols < 1) {
        throw ConfigError("maze spec: grid must have positive extent");
    }
    if (max_moves < 1) {
        throw ConfigError("maze spec: max_moves must be positive");
    }
    if (!in_bounds(start) || !in_bounds(target)) {
        throw ConfigError("maze spec: start and target must be inside the grid");
    }
    if (start == target) {
        throw ConfigError("maze spec: start and target must differ");
    }
    for (const auto &[a, b] : walls) {
        if (!in_bounds(a) || !in_bounds(b) || !adjacent(a, b)) {
            throw ConfigError("maze spec: walls must join adjacent in-bounds cells");
        }
    }
}

std::string MazeSpec::to_json() const {
    json j;
    j["rows"] = rows;
    j["cols"] = cols;
    j["start"] = {start.row, start.col};
    j["target"] = {target.row, target.col};
    j["max_moves"] = max_moves;
    j["walls"] = json::array();
    for (const auto &[a, b] : walls) {
        j["walls"].push_back(json::array({json::array({a.row, a.col}), json::array({b.row, b.col})}));
    }
    return j.dump();
}

MazeSpec MazeSpec::from_json(const std::string &text) {
    MazeSpec spec;
    try {
        const json j = json::parse(text);
        spec.rows = j.value("rows", spec.rows);
        spec.cols = j.value("cols", spec.cols);
        if (j.contains("start")) {
            spec.start = parse_cell(j.at("start"));
        }
        if (j.contains("target")) {
            spec.target = parse_cell(j.at("target"));
        }
        spec.max_moves = j.value("max_moves", spec.max_moves);
        if (j.contains("walls")) {
            for (const auto &w : j.at("walls")) {
                if (!w.is_array() || w.size() != 2) {
                    throw ConfigError("maze spec: a wall must be [[r,c],[r,c]]");
                }
                spec.add_wall(parse_cell(w.at(0)), parse_cell(w.at(1)));
            }
        }
    } catch (const json::exception &e) {
        throw ConfigError(std::string("maze spec: ") + e.what());
    }
    spec.validate();
    return spec;
}

MazeSpec MazeSpec::load(const std::string &path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open maze spec " + path);
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json(ss.str());
}

const char *token_name(int token) {
    switch (token) {
    case kBos:
        return "<bos>";
    case kEos:
        return "<eos>";
    case kUp:
        return "up";
    case kDown:
        return "down";
    case kLeft:
        return "left";
    case kRight:
        return "right";
    default:
        return "?";
    }
}

std::string to_string(std::span<const int> tokens) {
    std::string out;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i > 0) {
            out += ' ';
        }
        out += token_name(tokens[i]);
    }
    return out;
}

std::optional<Cell> apply_move(const MazeSpec &spec, Cell from, int move) {
    Cell to = from;
    switch (move) {
    case kUp:
        --to.row;
        break;
    case kDown:
        ++to.row;
        break;
    case kLeft:
        --to.col;
        break;
    case kRight:
        ++to.col;
        break;
    default:
        return std::nullopt;
    }
    if (!spec.in_bounds(to) || spec.blocked(from, to)) {
        return std::nullopt;
    }
    return to;
}

TokenSequence pad_path(const MazeSpec &spec, std::span<const int> moves) {
    TokenSequence seq;
    seq.reserve(spec.sequence_length());
    seq.push_back(kBos);
    seq.insert(seq.end(), moves.begin(), moves.end());
    seq.resize(spec.sequence_length(), kEos);
    return seq;
}

std::vector<TokenSequence> enumerate_paths(const MazeSpec &spec, std::size_t cap, std::uint64_t seed) {
    spec.validate();
    struct Partial {
        Cell at;
        std::vector<int> moves;
    };
    std::vector<TokenSequence> found;
    std::deque<Partial> frontier;
    frontier.push_back({spec.start, {}});
    while (!frontier.empty()) {
        Partial cur = std::move(frontier.front());
        frontier.pop_front();
        if (!cur.moves.empty() && cur.at == spec.target) {
            found.push_back(pad_path(spec, cur.moves));
        }
        if (static_cast<int>(cur.moves.size()) == spec.max_moves) {
            continue;
        }
        for (const int m : {kUp, kDown, kLeft, kRight}) {
            if (const auto next = apply_move(spec, cur.at, m)) {
                Partial p{*next, cur.moves};
                p.moves.push_back(m);
                frontier.push_back(std::move(p));
            }
        }
    }
    if (found.empty()) {
        throw ConfigError("maze spec admits no valid path within max_moves");
    }
    if (cap == 0 || found.size() <= cap) {
        return found;
    }
    std::vector<std::size_t> idx(found.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    Rng rng = Rng::stream(seed, {name_key("data"), name_key("maze-subsample")});
    for (std::size_t i = 0; i < cap; ++i) {
        std::swap(idx[i], idx[i + rng.below(idx.size() - i)]);
    }
    idx.resize(cap);
    std::sort(idx.begin(), idx.end());
    std::vector<TokenSequence> kept;
    kept.reserve(cap);
    for (const std::size_t i : idx) {
        kept.push_back(std::move(found[i]));
    }
    return kept;
}

bool is_valid_path(const MazeSpec &spec, std::span<const int> tokens) {
    if (tokens.empty() || tokens[0] != kBos) {
        return false;
    }
    Cell at = spec.start;
    int moves = 0;
    std::size_t i = 1;
    for (; i < tokens.size() && tokens[i] != kEos; ++i) {
        const auto next = apply_move(spec, at, tokens[i]);
        if (!next) {
            return false;
        }
        at = *next;
        ++moves;
    }
    if (i == tokens.size()) {
        return false; // no EOS
    }
    for (; i < tokens.size(); ++i) {
        if (tokens[i] != kEos) {
            return false;
        }
    }
    return moves >= 1 && moves <= spec.max_moves && at == spec.target;
}

double eval_success(const MazeSpec &spec, const std::vector<TokenSequence> &samples) {
    if (samples.empty()) {
        throw ContractError("eval_success: no samples");
    }
    const auto ok = std::count_if(samples.begin(), samples.end(),
                                  [&](const TokenSequence &s) { return is_valid_path(spec, s); });
    return static_cast<double>(ok) / static_cast<double>(samples.size());
}

std::string corpus_to_ndjson(const std::vector<TokenSequence> &corpus) {
    std::string out;
    for (const auto &x : corpus) {
        out += nlohmann::json(x).dump();
        out += '\n';
    }
    return out;
}

std::vector<TokenSequence> corpus_from_ndjson(const std::string &text) {
    std::vector<TokenSequence> corpus;
    std::istringstream in(text);
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (line.empty()) {
            continue;
        }
        try {
            corpus.push_back(nlohmann::json::parse(line).get<TokenSequence>());
        } catch (const nlohmann::json::exception &e) {
            throw ConfigError("corpus line " + std::to_string(n) + ": " + e.what());
        }
    }
    return corpus;
}

std::vector<TokenSequence> load_corpus(const std::string &path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) {
        throw ConfigError("cannot open corpus file " + path);
    }
    std::ostringstream ss;
    ss << f.rdbuf();
    return corpus_from_ndjson(ss.str());
}

} // namespace gdl::maze
