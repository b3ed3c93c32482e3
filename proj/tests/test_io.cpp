#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "vcat/io.hpp"

using namespace vcat;

namespace {

std::filesystem::path temp_path(const char* name) {
    return std::filesystem::path("/tmp") / (std::string("vcat_test_io_") + name);
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

TEST_CASE("format_double survives a parse round trip bit-exactly") {
    const std::vector<double> values = {
        0.0,           1.0,          -1.0,       0.1,         1.0 / 3.0, M_PI,
        std::exp(1.0), 6.02214076e23, 1e-300,    -2.5e-17,    1e300,     5e-324,
        0.3333333333333333, 123456789.123456789, -0.49999999999999994};
    for (double v : values) {
        const std::string s = format_double(v);
        const double back = std::strtod(s.c_str(), nullptr);
        REQUIRE(back == v);
    }
}

TEST_CASE("csv cells with commas and quotes round trip") {
    const auto path = temp_path("quoting.csv");
    {
        CsvWriter csv(path, {"a", "b", "c"});
        csv.write_row({"plain", "with,comma", "with\"quote"});
        csv.write_row({"\"both\",", "", "trailing,"});
    }

    const CsvTable t = read_csv(path);
    REQUIRE(t.header == std::vector<std::string>{"a", "b", "c"});
    REQUIRE(t.rows.size() == 2);
    CHECK(t.rows[0] == std::vector<std::string>{"plain", "with,comma", "with\"quote"});
    CHECK(t.rows[1] == std::vector<std::string>{"\"both\",", "", "trailing,"});
}

TEST_CASE("csv quoting is only applied when needed") {
    const auto path = temp_path("minimal.csv");
    {
        CsvWriter csv(path, {"x", "y"});
        csv.write_row({"bare", "a,b"});
    }
    const std::string text = slurp(path);
    CHECK(text == "x,y\nbare,\"a,b\"\n");
}

TEST_CASE("csv writer rejects rows of the wrong width") {
    const auto path = temp_path("width.csv");
    CsvWriter csv(path, {"a", "b"});
    CHECK_THROWS_AS(csv.write_row({"only-one"}), UsageError);
    CHECK_THROWS_AS(csv.write_row({"1", "2", "3"}), UsageError);
    CHECK_NOTHROW(csv.write_row({"1", "2"}));
}

TEST_CASE("csv reader rejects malformed files") {
    const auto ragged = temp_path("ragged.csv");
    {
        std::ofstream out(ragged);
        out << "a,b\n1,2,3\n";
    }
    CHECK_THROWS_AS(read_csv(ragged), FormatError);

    const auto unterminated = temp_path("unterminated.csv");
    {
        std::ofstream out(unterminated);
        out << "a,b\n\"open,2\n";
    }
    CHECK_THROWS_AS(read_csv(unterminated), FormatError);

    const auto empty = temp_path("empty.csv");
    { std::ofstream out(empty); }
    CHECK_THROWS_AS(read_csv(empty), FormatError);

    CHECK_THROWS_AS(read_csv(temp_path("does_not_exist.csv")), ConfigError);
}

TEST_CASE("metrics csv uses the shared schema and reloads exactly") {
    const auto path = temp_path("metrics.csv");
    std::vector<MetricsRow> rows(2);
    rows[0].iteration = 0;
    rows[0].episodes = 37;
    rows[0].crash_rate = 1.0 / 3.0;
    rows[0].mean_r_ins_raw = 0.125;
    rows[0].policy_loss = -3.7e-3;
    rows[0].van_loss = M_PI;
    rows[0].rnd_loss = 1e-12;
    rows[0].wall_time_ms = 12345;
    rows[1].iteration = 1;
    rows[1].episodes = 80;
    rows[1].crash_rate = 0.62;

    write_metrics_csv(path, rows);
    const CsvTable t = read_csv(path);

    REQUIRE(t.header == metrics_csv_header());
    REQUIRE(t.rows.size() == 2);
    CHECK(t.rows[0][0] == "0");
    CHECK(t.rows[0][1] == "37");
    CHECK(std::strtod(t.rows[0][2].c_str(), nullptr) == 1.0 / 3.0);
    CHECK(std::strtod(t.rows[0][3].c_str(), nullptr) == 0.125);
    CHECK(std::strtod(t.rows[0][4].c_str(), nullptr) == -3.7e-3);
    CHECK(std::strtod(t.rows[0][5].c_str(), nullptr) == M_PI);
    CHECK(std::strtod(t.rows[0][6].c_str(), nullptr) == 1e-12);
    CHECK(t.rows[0][7] == "12345");
    CHECK(std::strtod(t.rows[1][2].c_str(), nullptr) == 0.62);
}

TEST_CASE("json sidecars round trip and bad files are rejected") {
    const auto path = temp_path("meta.json");
    nlohmann::json j;
    j["role"] = "victim";
    j["seed"] = 123456789012345ull;
    j["rates"] = {0.25, 1.0 / 3.0, 1e-300};
    j["nested"]["goal_rate"] = 0.98;

    write_json(path, j);
    const nlohmann::json back = read_json(path);
    CHECK(back == j);
    CHECK(back["rates"][1].get<double>() == 1.0 / 3.0);

    const auto bad = temp_path("bad.json");
    {
        std::ofstream out(bad);
        out << "{ not json";
    }
    CHECK_THROWS_AS(read_json(bad), FormatError);
    CHECK_THROWS_AS(read_json(temp_path("missing.json")), ConfigError);
}

TEST_CASE("ensure_dir creates nested directories and tolerates repeats") {
    const auto dir = temp_path("nested") / "a" / "b";
    std::filesystem::remove_all(temp_path("nested"));
    ensure_dir(dir);
    CHECK(std::filesystem::is_directory(dir));
    CHECK_NOTHROW(ensure_dir(dir));
}
