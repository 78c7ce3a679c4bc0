#include "gdl/io.hpp"

#include "gdl/errors.hpp"
#include "gdl/rng.hpp"

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace gdl::io {

std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string csv_escape(std::string_view field) {
    if (field.find_first_of(",\"\r\n") == std::string_view::npos) {
        return std::string(field);
    }
    std::string out = "\"";
    for (const char c : field) {
        if (c == '"') {
            out += '"';
        }
        out += c;
    }
    out += '"';
    return out;
}

CsvWriter::CsvWriter(std::vector<std::string> header) : width_(header.size()) { row(header); }

void CsvWriter::row(const std::vector<std::string> &fields) {
    if (fields.size() != width_) {
        throw ContractError("csv: row has " + std::to_string(fields.size()) + " fields, header has " +
                            std::to_string(width_));
    }
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i > 0) {
            text_ += ',';
        }
        text_ += csv_escape(fields[i]);
    }
    text_ += "\r\n";
}

std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool quoted = false;
    bool any = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
            continue;
        }
        any = true;
        if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            row.push_back(std::move(field));
            field.clear();
        } else if (c == '\r' || c == '\n') {
            if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') {
                ++i;
            }
            row.push_back(std::move(field));
            field.clear();
            rows.push_back(std::move(row));
            row.clear();
            any = false;
        } else {
            field += c;
        }
    }
    if (any || !field.empty() || !row.empty()) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string config_hash(const nlohmann::json &config) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(name_key(config.dump())));
    return buf;
}

nlohmann::json artifact_meta(std::uint64_t seed, const nlohmann::json &config) {
    return {{"seed", seed}, {"config_hash", config_hash(config)}, {"format_version", kFormatVersion}};
}

std::string read_file(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigError("cannot open " + path);
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string &path, std::string_view contents) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw ConfigError("cannot write " + path);
    }
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
}

nlohmann::json read_json(const std::string &path) {
    try {
        return nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::exception &e) {
        throw ConfigError(path + ": " + e.what());
    }
}

void ensure_dir(const std::string &path) {
    std::error_code ec;
    std::filesystem::create_directories(path, ec);
    if (ec) {
        throw ConfigError("cannot create directory " + path + ": " + ec.message());
    }
}

void record_artifact(const std::string &dir, const std::string &file, const nlohmann::json &meta) {
    const std::string path = (std::filesystem::path(dir) / "manifest.json").string();
    nlohmann::json manifest = nlohmann::json::object();
    if (std::filesystem::exists(path)) {
        manifest = read_json(path);
    }
    manifest[file] = meta;
    write_file(path, manifest.dump(2) + "\n");
}

} // namespace gdl::io
