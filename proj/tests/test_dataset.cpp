// Apache License, Version 2.0, refer to LICENSE.txt
#include <catch2/catch_amalgamated.hpp>

#include <sstream>

#include "hammix/dataset.hpp"
#include "hammix/rng.hpp"
#include "oracles.hpp"

using namespace hammix;

TEST_CASE("loading builds alphabets in order of first appearance", "[dataset]") {
    std::istringstream in("A,x\nB,y\nA,z\n");
    const auto ds = load_dataset(in, {',', false});
    REQUIRE(ds.n == 3);
    REQUIRE(ds.p == 2);
    REQUIRE(ds.modality_counts() == std::vector<int>{2, 3});
    CHECK(ds.alphabets[0].labels == std::vector<std::string>{"A", "B"});
    CHECK(ds.alphabets[1].labels == std::vector<std::string>{"x", "y", "z"});
    CHECK(ds.code(0, 0) == 0);
    CHECK(ds.code(1, 0) == 1);
    CHECK(ds.code(2, 1) == 2);
    CHECK(ds.variable_names == std::vector<std::string>{"V1", "V2"});
}

TEST_CASE("header row provides variable names", "[dataset]") {
    std::istringstream in("color,size\nred,big\nblue,small\n");
    const auto ds = load_dataset(in);
    REQUIRE(ds.n == 2);
    CHECK(ds.variable_names == std::vector<std::string>{"color", "size"});
}

TEST_CASE("ragged and empty inputs are rejected with context", "[dataset]") {
    SECTION("short row") {
        std::istringstream in("a,b\nc\n");
        try {
            load_dataset(in, {',', false});
            FAIL("expected ParseError");
        } catch (const ParseError& e) {
            CHECK(std::string(e.what()).find("line 2") != std::string::npos);
        }
    }
    SECTION("empty file") {
        std::istringstream in("");
        CHECK_THROWS_AS(load_dataset(in, {',', false}), ParseError);
    }
    SECTION("empty field") {
        std::istringstream in("a,b\nc,\n");
        CHECK_THROWS_AS(load_dataset(in, {',', false}), ParseError);
    }
}

TEST_CASE("constant column is tolerated with a warning", "[dataset]") {
    std::istringstream in("a,x\na,y\n");
    const auto ds = load_dataset(in, {',', false});
    REQUIRE(ds.warnings.size() == 1);
    CHECK(ds.modality_counts()[0] == 1);
}

TEST_CASE("alternate delimiter", "[dataset]") {
    std::istringstream in("a;b\nc;d\n");
    const auto ds = load_dataset(in, {';', false});
    CHECK(ds.p == 2);
    CHECK(ds.n == 2);
}

TEST_CASE("hamming distance basics", "[dataset]") {
    // (A,b,yes) vs (A,d,no) over alphabets of sizes (5,4,2)
    CHECK(hamming_distance({0, 1, 0}, {0, 3, 1}) == 2);
    CHECK(hamming_distance({2, 1, 0}, {2, 1, 0}) == 0);
    CHECK(hamming_distance({0, 0, 0, 0, 0}, {1, 1, 1, 1, 1}) == 5);
    CHECK_THROWS_AS(hamming_distance({0, 1}, {0, 1, 2}), std::invalid_argument);
}

TEST_CASE("hamming distance is a metric on a small space", "[dataset]") {
    const auto space = oracles::enumerate_space({2, 3, 2});
    for (const auto& x : space)
        for (const auto& y : space) {
            const int d = hamming_distance(x, y);
            CHECK(d == hamming_distance(y, x));
            CHECK(d >= 0);
            CHECK((d == 0) == (x == y));
            for (const auto& z : space)
                CHECK(d <= hamming_distance(x, z) + hamming_distance(z, y));
        }
}

TEST_CASE("encode/decode round trip", "[dataset]") {
    RngStream rng(7);
    const char* pool[] = {"red", "green", "blue", "left", "right", "up"};
    for (int rep = 0; rep < 20; ++rep) {
        const int n = 1 + static_cast<int>(rng.uniform_below(8));
        const int p = 1 + static_cast<int>(rng.uniform_below(4));
        std::vector<std::vector<std::string>> rows(n, std::vector<std::string>(p));
        std::ostringstream text;
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < p; ++j) {
                rows[i][j] = pool[rng.uniform_below(6)];
                text << (j ? "," : "") << rows[i][j];
            }
            text << "\n";
        }
        std::istringstream in(text.str());
        const auto ds = load_dataset(in, {',', false});
        REQUIRE(ds.n == n);
        for (int i = 0; i < n; ++i) CHECK(ds.decode_row(i) == rows[i]);
    }
}

TEST_CASE("dissimilarity matrix is symmetric with zero diagonal", "[dataset]") {
    std::istringstream in("a,x\nb,x\na,y\n");
    const auto ds = load_dataset(in, {',', false});
    const auto d = dissimilarity_matrix(ds);
    for (int i = 0; i < ds.n; ++i) {
        CHECK(d[i * ds.n + i] == 0);
        for (int j = 0; j < ds.n; ++j) CHECK(d[i * ds.n + j] == d[j * ds.n + i]);
    }
    CHECK(d[0 * 3 + 1] == 1);
    CHECK(d[1 * 3 + 2] == 2);
}

TEST_CASE("zoo data ships with the expected shape", "[dataset]") {
    const auto zoo = oracles::load_zoo();
    REQUIRE(zoo.n == 101);
    REQUIRE(zoo.p == 16);
    const auto m = zoo.modality_counts();
    int binary = 0;
    for (int j = 0; j < zoo.p; ++j) binary += m[j] == 2;
    CHECK(binary == 15);
    CHECK(m[12] == 6);  // legs
    const auto cls = oracles::load_zoo_classes();
    REQUIRE(cls.size() == 101);
    std::vector<int> sizes(8, 0);
    for (int c : cls) ++sizes[c];
    CHECK(sizes == std::vector<int>{0, 41, 20, 5, 13, 4, 8, 10});
}
