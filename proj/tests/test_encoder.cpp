#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "coral_cloze/embeddings.hpp"
#include "coral_cloze/encoder.hpp"
#include "coral_cloze/random.hpp"

using namespace coral_cloze;
using Catch::Matchers::WithinAbs;

namespace {
ClozeInstance peeling_skin() {
    ClozeInstance in;
    in.id = "42_1";
    in.resolved_pattern = ResolvedPattern::added_compound;
    in.section_header = "Following a Basic Routine";
    in.article_title = "How to Get Rid of Peeling Skin";
    in.previous_context = "(...) 6. Never tear away loose skin. (...) 7. Protect your skin from sunlight.";
    in.sentence =
        "Exposure to direct sunlight can weaken your skin further and complicate the [FILLER] problem.";
    in.follow_up_context =
        "This is true regardless of whether your skin is peeling due to a sunburn or due to dryness.";
    in.filler = "peeling";
    return in;
}

double l2(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}
}  // namespace

TEST_CASE("format_instance reproduces the four-line input layout", "[encoder]") {
    const auto out = format_instance(peeling_skin(), "peeling");
    const std::string expected =
        "Resolved pattern: ADDED COMPOUND\n"
        "Section header: Following a Basic Routine\n"
        "Article title: How to Get Rid of Peeling Skin\n"
        "Text: (...) 6. Never tear away loose skin. (...) 7. Protect your skin from sunlight. Exposure to direct "
        "sunlight can weaken your skin further and complicate the peeling problem. This is true regardless of "
        "whether your skin is peeling due to a sunburn or due to dryness.";
    CHECK(out.text == expected);
    CHECK(out.text.substr(out.filler_offset, out.filler_length) == "peeling");
    CHECK(out.text.substr(out.filler_offset - 15, 15) == "complicate the ");
}

TEST_CASE("format_instance edge cases", "[encoder]") {
    auto in = peeling_skin();
    in.previous_context.clear();
    in.follow_up_context.clear();
    const auto bare = format_instance(in, "dry");
    CHECK(bare.text.ends_with(
        "\nText: Exposure to direct sunlight can weaken your skin further and complicate the dry problem."));

    const auto empty = format_instance(peeling_skin(), "");
    CHECK(empty.text.find("complicate the problem.") != std::string::npos);
    CHECK(empty.text.find("  ") == std::string::npos);
    CHECK(empty.filler_length == 0);

    auto none = peeling_skin();
    none.sentence = "No blank here.";
    CHECK_THROWS_AS(format_instance(none, "x"), ValidationError);
    auto two = peeling_skin();
    two.sentence = "[FILLER] and [FILLER]";
    CHECK_THROWS_AS(format_instance(two, "x"), ValidationError);
    auto lower = peeling_skin();
    lower.sentence = "the [Filler] problem";
    CHECK_THROWS_AS(format_instance(lower, "x"), ValidationError);
}

TEST_CASE("tokenize lowercases and splits on whitespace and punctuation", "[encoder]") {
    CHECK(tokenize("Hello, World!  (it's) fine") ==
          std::vector<std::string>{"hello", "world", "it", "s", "fine"});
    CHECK(tokenize("").empty());
    CHECK(tokenize("caf\xc3\xa9 ok") == std::vector<std::string>{"caf\xc3\xa9", "ok"});
}

TEST_CASE("featurize", "[encoder]") {
    const FeaturizerConfig cfg;
    const auto zero = featurize("", cfg);
    CHECK(zero.size() == 512);
    CHECK(l2(zero) == 0.0);
    CHECK(l2(featurize("...  ,", cfg)) == 0.0);

    const auto a = featurize("Protect your skin from sunlight.", cfg);
    CHECK_THAT(l2(a), WithinAbs(1.0, 1e-12));
    CHECK(a == featurize("Protect your skin from sunlight.", cfg));
    CHECK(a == featurize("protect YOUR skin, from sunlight", cfg));

    FeaturizerConfig other = cfg;
    other.seed = 99;
    CHECK(a != featurize("Protect your skin from sunlight.", other));

    FeaturizerConfig bad = cfg;
    bad.dim = 300;
    CHECK_THROWS_AS(featurize("x", bad), ConfigError);
}

TEST_CASE("featurize gives unit norm on random text", "[encoder][property]") {
    Rng rng(12);
    const FeaturizerConfig cfg{256, {1, 2}, {3, 4, 5}, 5};
    for (int trial = 0; trial < 200; ++trial) {
        std::string text;
        const auto n = 1 + rng.below(40);
        for (std::size_t i = 0; i < n; ++i) text += static_cast<char>('a' + rng.below(26)) + std::string(rng.below(3) ? "" : " ");
        CHECK_THAT(l2(featurize(text, cfg)), WithinAbs(1.0, 1e-12));
    }
}

TEST_CASE("pool concatenates context and filler halves", "[encoder]") {
    const FeaturizerConfig cfg;
    const auto in = peeling_skin();
    const auto a = pool(in, "peeling", cfg);
    const auto b = pool(in, "flaking", cfg);
    REQUIRE(a.size() == 1024);
    const std::vector<double> a_ctx(a.begin(), a.begin() + 512), a_fill(a.begin() + 512, a.end());
    const std::vector<double> b_fill(b.begin() + 512, b.end());
    CHECK(a_ctx == featurize(format_instance(in, "peeling").text, cfg));
    CHECK(a_fill == featurize("peeling", cfg));
    CHECK(a_fill != b_fill);

    const auto e = pool(in, "", cfg);
    CHECK(l2(std::vector<double>(e.begin() + 512, e.end())) == 0.0);

    const auto only = pool(in, "peeling", cfg, Pooling::filler_only);
    CHECK(only == a_fill);
}

TEST_CASE("context half without the filler is the same for every filler", "[encoder][property]") {
    const FeaturizerConfig cfg;
    auto in = peeling_skin();
    const auto reference = featurize(format_instance(in, "").text, cfg);
    for (const char* f : {"peeling", "sunburn", "dry skin", "whole"}) {
        in.filler = f;
        CHECK(featurize(format_instance(in, "").text, cfg) == reference);
        CHECK(pool(in, f, cfg) == pool(in, f, cfg));
    }
}

TEST_CASE("embedding table file round trip and pooled layout", "[encoder][embeddings]") {
    EmbeddingTable table(3);
    table.insert({"42", 1}, {{1, 2, 3}, {4, 5, 6}});
    table.insert({"42", 2}, {{1, 2, 3}, {7, 8, 9}});
    table.insert({"solo", 0}, {{0.5, 0, 0}, {0, 0, -0.5}});
    CHECK_THROWS_AS(table.insert({"x", 0}, {{1}, {1}}), ConfigError);

    const auto path = (std::filesystem::temp_directory_path() / "coral_cloze_emb_test.bin").string();
    table.save(path);
    const auto loaded = EmbeddingTable::load(path);
    CHECK(loaded.dim() == 3);
    CHECK(loaded.size() == 3);
    CHECK(loaded.pool("42_2", Pooling::concat) == std::vector<double>{1, 2, 3, 7, 8, 9});
    CHECK(loaded.pool("42_1", Pooling::filler_only) == std::vector<double>{4, 5, 6});
    CHECK(loaded.pool("solo", Pooling::concat) == std::vector<double>{0.5, 0, 0, 0, 0, -0.5});
    CHECK_THROWS_AS(loaded.pool("42_3", Pooling::concat), ValidationError);

    {
        std::FILE* f = std::fopen(path.c_str(), "wb");
        std::fputs("NWRZ-EMB-0\n", f);
        std::fclose(f);
    }
    CHECK_THROWS_AS(EmbeddingTable::load(path), ValidationError);
    std::filesystem::remove(path);
}

TEST_CASE("instance_key splits a trailing filler index", "[encoder]") {
    CHECK(instance_key("12_3") == InstanceKey{"12", 3});
    CHECK(instance_key("a_b_10") == InstanceKey{"a_b", 10});
    CHECK(instance_key("plain") == InstanceKey{"plain", 0});
    CHECK(instance_key("x_") == InstanceKey{"x_", 0});
    CHECK(instance_key("_4") == InstanceKey{"_4", 0});
}
