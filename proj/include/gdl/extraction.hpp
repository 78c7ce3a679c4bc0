#pragma once

// Stage-1 data generation: (token, Gumbel) sequence pairs from a teacher, and
// their partition into distillation triplets.

#include "gdl/gumbel.hpp"
#include "gdl/teacher.hpp"
#include "gdl/types.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace gdl::extraction {

using GumbelSequence = std::vector<GumbelVector>;

struct Extracted {
    TokenSequence tokens;
    GumbelSequence noise;
};

// Ancestral Gumbel-Max sampling from the teacher, keeping the noise. Draws up
// to max_len positions; with stop_token >= 0, stops right after it.
Extracted sequential_extract(const teacher::TeacherModel &teacher, std::size_t max_len, Rng &rng,
                             int stop_token = -1);

// Identifies the independent random stream behind one parallel extraction.
// Position i of the sequence draws from stream(seed, "extract", sequence_id, i),
// so the result does not depend on evaluation order or thread count.
struct ExtractionStream {
    std::uint64_t seed = 0;
    std::uint64_t sequence_id = 0;
};

// One forward_sequence call, then posterior noise per position. Throws
// ConditioningError (carrying the position) if some x[i] has probability 0.
GumbelSequence parallel_extract(const teacher::TeacherModel &teacher, std::span<const int> x, ExtractionStream stream,
                                PosteriorVariant variant = PosteriorVariant::reference);

// parallel_extract over a corpus on worker threads; sequence s uses
// sequence_id = id_base + s.
std::vector<GumbelSequence> parallel_extract_all(const teacher::TeacherModel &teacher,
                                                 const std::vector<TokenSequence> &corpus, std::uint64_t seed,
                                                 std::uint64_t id_base = 0);

// x^i = gumbel_max(teacher.logits(x^{<i}), noise^i) for every position.
TokenSequence replay(const teacher::TeacherModel &teacher, const GumbelSequence &noise);

// ---------------------------------------------------------------- triplets

enum class MaskKind { uniform, block };

struct MaskRule {
    MaskKind kind = MaskKind::uniform;
    std::size_t block_size = 4; // block rule only
    // Fixes the corruption level instead of drawing t ~ U(0, 1].
    std::optional<double> forced_t;
};

struct DistillationTriplet {
    // Original tokens with masked positions replaced by the MASK id. Under the
    // block rule this also masks every later block (hidden, not scored).
    TokenSequence context;
    std::vector<std::size_t> positions; // I, ascending
    GumbelSequence noise;               // aligned with positions
    TokenSequence targets;              // aligned with positions
    double t = 1.0;
    std::size_t n = 0;
};

// Uniform rule: each position enters I independently with probability t.
// Block rule: pick a block b; earlier blocks stay visible, block b positions
// enter I with probability t, later blocks are hidden. An empty I is rejected
// and t redrawn. `noise` may be empty (baseline training with no conditioning).
DistillationTriplet make_triplet(std::span<const int> x, const GumbelSequence &noise, const MaskRule &rule,
                                 int mask_token, Rng &rng);

// ---------------------------------------------------------------- offline dumps

// {"tokens":[int],"gumbel":[[float]]} per line, floats at 17 significant digits.
std::string to_ndjson(const Extracted &record);
Extracted from_ndjson(const std::string &line);
void save_ndjson(const std::string &path, const std::vector<Extracted> &records);
std::vector<Extracted> load_ndjson(const std::string &path);

} // namespace gdl::extraction
