#pragma once

// The maze navigation toy language: a path is BOS, a run of moves, then EOS
// (right-padded with EOS to a fixed length of max_moves + 2).

#include "gdl/types.hpp"

#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace gdl::maze {

enum Token : int {
    kBos = 0,
    kEos = 1,
    kUp = 2,
    kDown = 3,
    kLeft = 4,
    kRight = 5,
};

inline constexpr int kVocabSize = 6;
inline constexpr std::size_t kDefaultCorpusCap = 2000;

// (row, col); row grows downward from the upper-left corner, col grows to the right.
struct Cell {
    int row = 0;
    int col = 0;
    auto operator<=>(const Cell &) const = default;
};

struct MazeSpec {
    int rows = 4;
    int cols = 5;
    Cell start{3, 1};
    Cell target{3, 4};
    int max_moves = 10;
    // Blocked edges between adjacent cells, stored with the smaller cell first.
    std::set<std::pair<Cell, Cell>> walls;

    bool in_bounds(Cell c) const { return c.row >= 0 && c.row < rows && c.col >= 0 && c.col < cols; }
    bool blocked(Cell a, Cell b) const;
    void add_wall(Cell a, Cell b);
    std::size_t sequence_length() const { return static_cast<std::size_t>(max_moves) + 2; }

    // Throws ConfigError when geometry is inconsistent.
    void validate() const;

    std::string to_json() const;
    static MazeSpec from_json(const std::string &text);
    static MazeSpec load(const std::string &path);
};

const char *token_name(int token);
std::string to_string(std::span<const int> tokens);

// Cell reached by applying a move token, or nullopt if it leaves the grid or
// crosses a wall.
std::optional<Cell> apply_move(const MazeSpec &spec, Cell from, int move);

// Breadth-first enumeration of every move sequence with at most max_moves moves
// that ends on the target. Revisits (including of the target) are allowed.
// Results are EOS-padded token sequences in BFS order. If cap > 0 and more
// paths exist, a uniform subset of size cap is kept (selected with `seed`, order
// preserved). Throws ConfigError if no path exists.
std::vector<TokenSequence> enumerate_paths(const MazeSpec &spec, std::size_t cap = kDefaultCorpusCap,
                                           std::uint64_t seed = 0);

TokenSequence pad_path(const MazeSpec &spec, std::span<const int> moves);

bool is_valid_path(const MazeSpec &spec, std::span<const int> tokens);

double eval_success(const MazeSpec &spec, const std::vector<TokenSequence> &samples);

// Corpus files: one JSON token array per line.
std::string corpus_to_ndjson(const std::vector<TokenSequence> &corpus);
std::vector<TokenSequence> corpus_from_ndjson(const std::string &text);
std::vector<TokenSequence> load_corpus(const std::string &path);

} // namespace gdl::maze
