#pragma once

// CSV/NDJSON output helpers and artifact metadata.

#include <json.hpp>

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace gdl::io {

inline constexpr int kFormatVersion = 1;

// Shortest decimal that round-trips to the same double.
std::string format_double(double v);

// RFC 4180: CRLF line ends, fields quoted when they contain a comma, quote,
// CR or LF.
class CsvWriter {
public:
    explicit CsvWriter(std::vector<std::string> header);
    void row(const std::vector<std::string> &fields);
    const std::string &str() const noexcept { return text_; }

private:
    std::size_t width_;
    std::string text_;
};

std::string csv_escape(std::string_view field);

// Parses RFC 4180 text into rows of fields.
std::vector<std::vector<std::string>> parse_csv(std::string_view text);

// FNV-1a over the canonical (sorted-key, compact) dump, as 16 hex digits.
std::string config_hash(const nlohmann::json &config);

// {"seed", "config_hash", "format_version"}
nlohmann::json artifact_meta(std::uint64_t seed, const nlohmann::json &config);

std::string read_file(const std::string &path);
void write_file(const std::string &path, std::string_view contents);
nlohmann::json read_json(const std::string &path);
void ensure_dir(const std::string &path);

// Records `file` (relative name) with its metadata in <dir>/manifest.json,
// replacing any previous entry for the same file.
void record_artifact(const std::string &dir, const std::string &file, const nlohmann::json &meta);

} // namespace gdl::io
