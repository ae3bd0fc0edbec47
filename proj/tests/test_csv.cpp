#include "catch_amalgamated.hpp"

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "bcp/csv.hpp"

namespace fs = std::filesystem;
using bcp::ErrorCode;

namespace {

class TempDir {
public:
    TempDir() {
        path_ = fs::temp_directory_path() /
                ("bcp_csv_" + std::to_string(std::random_device{}()) + "_" +
                 std::to_string(counter_++));
        fs::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    fs::path write(const std::string& name, const std::string& text) const {
        const auto p = path_ / name;
        std::ofstream(p, std::ios::binary) << text;
        return p;
    }
    const fs::path& path() const { return path_; }

private:
    fs::path path_;
    static inline int counter_ = 0;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

std::string error_text(const fs::path& p, ErrorCode& code) {
    try {
        bcp::load_scores_csv(p);
    } catch (const bcp::Error& e) {
        code = e.code();
        return e.what();
    }
    FAIL("expected a load error");
    return {};
}

}  // namespace

TEST_CASE("score csv loads labels and scores", "[csv]") {
    TempDir dir;
    const auto cal = bcp::load_scores_csv(dir.write("s.csv", "label,s0,s1\n0,1.0,4.0\n1,2.0,0.5"));
    REQUIRE(cal.size() == 2);
    REQUIRE(cal.num_labels() == 2);
    CHECK(cal.observed_scores() == std::vector<double>{1.0, 0.5});
}

TEST_CASE("score csv accepts scientific notation and CRLF", "[csv]") {
    TempDir dir;
    const auto cal = bcp::load_scores_csv(dir.write("s.csv", "label,s0,s1\r\n1,2.5e-3,1E2\r\n"));
    CHECK(cal.scores()(0, 0) == 2.5e-3);
    CHECK(cal.observed(0) == 100.0);
}

TEST_CASE("score csv diagnostics name the row", "[csv]") {
    TempDir dir;
    ErrorCode code{};

    auto msg = error_text(dir.write("a.csv", "label,s0,s1\n2,1.0,2.0\n"), code);
    CHECK(code == ErrorCode::label_out_of_range);
    CHECK_THAT(msg, Catch::Matchers::ContainsSubstring("row 1"));

    msg = error_text(dir.write("b.csv", "label,s0,s1\n0,-1.0,2.0\n"), code);
    CHECK(code == ErrorCode::negative_score);
    CHECK_THAT(msg, Catch::Matchers::ContainsSubstring("row 1"));

    msg = error_text(dir.write("c.csv", "label,s0,s1\n0,1.0,2.0\n1,abc,2.0\n"), code);
    CHECK(code == ErrorCode::malformed_row);
    CHECK_THAT(msg, Catch::Matchers::ContainsSubstring("row 2"));

    msg = error_text(dir.write("d.csv", "label,s0,s1\n0,1.0\n"), code);
    CHECK(code == ErrorCode::malformed_row);

    error_text(dir.write("e.csv", "label,s0\n0,1.0\n"), code);
    CHECK(code == ErrorCode::too_few_labels);

    error_text(dir.path() / "missing.csv", code);
    CHECK(code == ErrorCode::missing_file);

    error_text(dir.write("f.csv", "label,s0,s2\n0,1,2\n"), code);
    CHECK(code == ErrorCode::malformed_row);
}

TEST_CASE("score csv round-trips byte for byte", "[csv][property]") {
    TempDir dir;
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> mag(-12.0, 3.0);
    for (int trial = 0; trial < 25; ++trial) {
        const std::size_t n = 1 + rng() % 20, k = 2 + rng() % 6;
        std::vector<std::vector<double>> rows(n, std::vector<double>(k));
        std::vector<std::size_t> labels(n);
        for (std::size_t i = 0; i < n; ++i) {
            labels[i] = rng() % k;
            for (double& v : rows[i]) v = std::pow(10.0, mag(rng));
        }
        const bcp::CalibrationSet cal(bcp::ScoreMatrix::from_rows(rows), labels);
        const auto p = dir.path() / "rt.csv";
        bcp::write_file(p, bcp::write_scores_csv, cal);
        const auto back = bcp::load_scores_csv(p);
        CHECK(back == cal);

        const auto p2 = dir.path() / "rt2.csv";
        bcp::write_file(p2, bcp::write_scores_csv, back);
        CHECK(slurp(p) == slurp(p2));
    }
}

TEST_CASE("embedding csv", "[csv]") {
    TempDir dir;
    const auto emb = bcp::load_embeddings_csv(dir.write("e.csv", "e0,e1,e2\n1,2,3\n-4,5.5,6e1\n"));
    REQUIRE(emb.rows() == 2);
    REQUIRE(emb.dim() == 3);
    CHECK(emb.row(1)[2] == 60.0);

    CHECK_THROWS_AS(bcp::load_embeddings_csv(dir.write("f.csv", "e0,x1\n1,2\n")), bcp::Error);
    CHECK_THROWS_AS(bcp::load_embeddings_csv(dir.write("g.csv", "e0,e1\n1\n")), bcp::Error);

    const auto p = dir.path() / "rt.csv";
    bcp::write_file(p, bcp::write_embeddings_csv, emb);
    CHECK(bcp::load_embeddings_csv(p) == emb);
}

TEST_CASE("doubles print with 17 significant digits", "[csv]") {
    CHECK(bcp::format_double(0.1) == "0.10000000000000001");
    CHECK(bcp::format_double(1.0) == "1");
    CHECK(bcp::format_double(0.625) == "0.625");
}
