#include "gdl/errors.hpp"
#include "gdl/io.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <limits>

using namespace gdl;

TEST_SUITE("io") {

TEST_CASE("shortest round-trip doubles") {
    CHECK(io::format_double(0.1) == "0.1");
    CHECK(io::format_double(1.0) == "1");
    CHECK(io::format_double(0.85) == "0.85");
    for (const double v : {1.0 / 3.0, std::exp(1.0), 1e-300, -2.5e17, 5e-324}) {
        CHECK(std::strtod(io::format_double(v).c_str(), nullptr) == v);
    }
}

TEST_CASE("csv escaping and parsing") {
    CHECK(io::csv_escape("plain") == "plain");
    CHECK(io::csv_escape("a,b") == "\"a,b\"");
    CHECK(io::csv_escape("say \"hi\"") == "\"say \"\"hi\"\"\"");
    io::CsvWriter w({"x", "y"});
    w.row({"1", "two, three"});
    w.row({"line\nbreak", "\"q\""});
    CHECK(w.str().rfind("x,y\r\n1,\"two, three\"\r\n", 0) == 0);
    const auto rows = io::parse_csv(w.str());
    REQUIRE(rows.size() == 3);
    CHECK(rows[1][1] == "two, three");
    CHECK(rows[2][0] == "line\nbreak");
    CHECK(rows[2][1] == "\"q\"");
    CHECK_THROWS_AS(w.row({"only one"}), ContractError);
}

TEST_CASE("config hash ignores key order") {
    const auto a = nlohmann::json::parse(R"({"b":1,"a":[1,2]})");
    const auto b = nlohmann::json::parse(R"({"a":[1,2],"b":1})");
    CHECK(io::config_hash(a) == io::config_hash(b));
    CHECK(io::config_hash(a).size() == 16);
    CHECK(io::config_hash(a) != io::config_hash(nlohmann::json::parse(R"({"a":[2,1],"b":1})")));
    const auto meta = io::artifact_meta(7, a);
    CHECK(meta["seed"] == 7);
    CHECK(meta["format_version"] == io::kFormatVersion);
    CHECK(meta["config_hash"] == io::config_hash(a));
}

TEST_CASE("manifest") {
    const std::string dir = (std::filesystem::temp_directory_path() / "gdl_unit_manifest").string();
    std::filesystem::remove_all(dir);
    io::ensure_dir(dir);
    io::record_artifact(dir, "a.csv", io::artifact_meta(1, {}));
    io::record_artifact(dir, "b.csv", io::artifact_meta(2, {}));
    io::record_artifact(dir, "a.csv", io::artifact_meta(3, {}));
    const auto m = io::read_json(dir + "/manifest.json");
    CHECK(m.size() == 2);
    CHECK(m["a.csv"]["seed"] == 3);
    std::filesystem::remove_all(dir);
    CHECK_THROWS_AS(io::read_file("/nonexistent/file"), ConfigError);
}

} // TEST_SUITE
