#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "genius/error.hpp"
#include "genius/steer/keywords.hpp"
#include "genius/steer/relevance.hpp"
#include "genius/steer/steering.hpp"

namespace genius::steer {
namespace {

std::string read_file(const std::filesystem::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

std::size_t count(const std::string& haystack, const std::string& needle) {
    std::size_t n = 0;
    for (auto pos = haystack.find(needle); pos != std::string::npos; pos = haystack.find(needle, pos + 1)) ++n;
    return n;
}

TEST(KeywordPrompt, FillsImageCountAndInstruction) {
    const std::string p = render_keyword_prompt("swap face", 2);
    EXPECT_NE(p.find("the list of 2 provided images"), std::string::npos);
    EXPECT_NE(p.find("- Images Count: 2\n"), std::string::npos);
    EXPECT_NE(p.find("\"\"\"\nswap face\n\"\"\""), std::string::npos);
    EXPECT_EQ(p.find("{image_num}"), std::string::npos);
    EXPECT_EQ(p.find("{content}"), std::string::npos);
    EXPECT_NE(p.find("EXPERT IMAGE GENERATION PLANNER"), std::string::npos);
    EXPECT_EQ(count(p, "Example "), 2u);
}

TEST(KeywordPrompt, MatchesGoldenFile) {
    EXPECT_EQ(render_keyword_prompt("swap face", 2),
              read_file(std::filesystem::path(GENIUS_FIXTURE_DIR) / "golden/keyword_prompt_swap_face.txt"));
}

TEST(KeywordPrompt, EmptyInstructionLeavesEmptyFence) {
    const std::string p = render_keyword_prompt("", 1);
    EXPECT_NE(p.find("\"\"\"\n\n\"\"\""), std::string::npos);
}

TEST(KeywordPrompt, InstructionTextIsNotRescanned) {
    const std::string p = render_keyword_prompt("literal {image_num} stays", 3);
    EXPECT_NE(p.find("literal {image_num} stays"), std::string::npos);
}

TEST(KeywordResponse, ParsesFewShotExamples) {
    const auto plan = parse_keyword_response(
        R"({"<image 1>": "art style", "<image 2>": "car", "<image 3>": "background"})", 3);
    ASSERT_EQ(plan.image_count(), 3);
    EXPECT_EQ(plan.focus_for(1), "art style");
    EXPECT_EQ(plan.focus_for(2), "car");
    EXPECT_EQ(plan.focus_for(3), "background");

    const auto base = parse_keyword_response(R"({"<image 1>": "all"})", 1);
    EXPECT_TRUE(base.is_base(1));
}

TEST(KeywordResponse, ToleratesFencesAndWhitespace) {
    const auto plan = parse_keyword_response("\n```json\n{ \"<image 1>\": \"\" }\n```\n  ", 1);
    EXPECT_TRUE(plan.is_irrelevant(1));
}

TEST(KeywordResponse, MissingKeyIsNamed) {
    try {
        parse_keyword_response(R"({"<image 1>": ""})", 2);
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_NE(std::string(e.what()).find("\"<image 2>\""), std::string::npos) << e.what();
    }
}

TEST(KeywordResponse, RejectsExtraKeysBadValuesAndMalformedJson) {
    EXPECT_THROW(parse_keyword_response(R"({"<image 1>": "a", "<image 2>": "b"})", 1), ParseError);
    EXPECT_THROW(parse_keyword_response(R"({"<image 1>": 3})", 1), ParseError);
    EXPECT_THROW(parse_keyword_response(R"({"<image 1>": null})", 1), ParseError);
    EXPECT_THROW(parse_keyword_response(R"({"<image 1>": "a")", 1), ParseError);
    EXPECT_THROW(parse_keyword_response(R"(["<image 1>"])", 1), ParseError);
}

TEST(SplitKeywords, TrimsAndDropsEmpty) {
    EXPECT_EQ(split_keywords(" face , hair,, "), (std::vector<std::string>{"face", "hair"}));
    EXPECT_TRUE(split_keywords("").empty());
}

Vector unit(Eigen::Index n, Eigen::Index i) {
    Vector v = Vector::Zero(n);
    v(i) = 1.0;
    return v;
}

TEST(RelevanceMap, IdenticalAndOrthogonalTokens) {
    KeywordPlan plan{{"car"}};
    TokenMatrix tokens(2, 3);
    tokens.row(0) = unit(3, 0).transpose();
    tokens.row(1) = unit(3, 1).transpose();
    const KeywordEmbeddings kw{{"car", {unit(3, 0)}}};
    const auto map = relevance_map(plan, tokens, kw, {TokenSource::of_image(1), TokenSource::of_image(1)});
    EXPECT_NEAR(map.scores[0], 1.0, 1e-15);
    EXPECT_NEAR(map.scores[1], 0.0, 1e-15);
}

TEST(RelevanceMap, MaxPoolsOverKeywords) {
    KeywordPlan plan{{"face, hair"}};
    TokenMatrix tokens(1, 2);
    tokens.row(0) = unit(2, 0).transpose();
    Vector k1(2), k2(2);
    k1 << 0.3, std::sqrt(1.0 - 0.09);  // cosine 0.3
    k2 << 0.8, 0.6;                     // cosine 0.8
    const auto map = relevance_map(plan, tokens, {{"face, hair", {k1, k2}}}, {TokenSource::of_image(1)});
    EXPECT_NEAR(map.scores[0], 0.8, 1e-15);
}

TEST(RelevanceMap, ExcludesTextAndIrrelevantImages) {
    KeywordPlan plan{{"", "cup"}};
    numkit::Rng rng(1);
    const TokenMatrix tokens = rng.normal_tokens(4, 5);
    const std::vector<TokenSource> src{TokenSource::text(), TokenSource::of_image(1),
                                       TokenSource::of_image(2), TokenSource::of_image(2)};
    const auto map = relevance_map(plan, tokens, {{"cup", {rng.normal_vector(5)}}}, src);
    EXPECT_EQ(map.included, (std::vector<bool>{false, false, true, true}));
    EXPECT_EQ(map.scores[0], 0.0);
    EXPECT_EQ(map.scores[1], 0.0);
    const Vector bias = bias_map(map, 1e-6);
    EXPECT_EQ(bias(0), 0.0);
    EXPECT_EQ(bias(1), 0.0);
    EXPECT_NEAR(bias(2), -bias(3), 1e-12);
}

TEST(RelevanceMap, BaseImageUsesImageLevelKeyword) {
    KeywordPlan plan{{"all"}};
    TokenMatrix tokens(2, 2);
    tokens << 1.0, 0.0, 0.0, 1.0;  // mean (0.5, 0.5)
    const auto map = relevance_map(plan, tokens, {}, {TokenSource::of_image(1), TokenSource::of_image(1)});
    EXPECT_NEAR(map.scores[0], std::sqrt(0.5), 1e-15);
    EXPECT_NEAR(map.scores[1], std::sqrt(0.5), 1e-15);
}

TEST(RelevanceMap, ErrorsOnZeroNormAndMissingEmbedding) {
    KeywordPlan plan{{"car"}};
    TokenMatrix tokens = TokenMatrix::Zero(1, 3);
    EXPECT_THROW(relevance_map(plan, tokens, {{"car", {unit(3, 0)}}}, {TokenSource::of_image(1)}), DomainError);
    tokens(0, 0) = 1.0;
    EXPECT_THROW(relevance_map(plan, tokens, {}, {TokenSource::of_image(1)}), ContractError);
    EXPECT_THROW(relevance_map(plan, tokens, {{"car", {unit(3, 0)}}}, {}), ContractError);
}

TEST(Standardize, ConstantInputIsExactlyZero) {
    for (double c : {0.1, -3.7, 1e6, 0.3333333333333333}) {
        const std::vector<double> s(5, c);
        for (double v : standardize(s, 1e-6)) EXPECT_EQ(v, 0.0) << c;
    }
}

TEST(Standardize, OneTwoThree) {
    const std::vector<double> s{1.0, 2.0, 3.0};
    const auto f = standardize(s, 1e-6);
    // mean 2, population sigma sqrt(2/3)
    const double expected = 1.0 / (std::sqrt(2.0 / 3.0) + 1e-6);
    EXPECT_NEAR(f[0], -expected, 1e-12);
    EXPECT_EQ(f[1], 0.0);
    EXPECT_NEAR(f[2], expected, 1e-12);
    EXPECT_NEAR(f[2], 1.22474, 1e-4);
}

TEST(Standardize, AffineInvariantUpToEpsilon) {
    numkit::Rng rng(3);
    for (int t = 0; t < 200; ++t) {
        std::vector<double> s(static_cast<std::size_t>(rng.uniform_int(2, 30)));
        for (auto& v : s) v = rng.normal();
        const double alpha = std::exp(rng.uniform(-2.0, 2.0));
        const double beta = rng.uniform(-5.0, 5.0);
        std::vector<double> t2;
        for (double v : s) t2.push_back(alpha * v + beta);
        const auto a = standardize(s, 1e-12);
        const auto b = standardize(t2, 1e-12);
        for (std::size_t i = 0; i < s.size(); ++i) ASSERT_NEAR(a[i], b[i], 1e-9);
    }
}

TEST(Standardize, RejectsEmptyAndBadEpsilon) {
    EXPECT_THROW(standardize(std::vector<double>{}, 1e-6), ContractError);
    EXPECT_THROW(standardize(std::vector<double>{1.0}, 0.0), ContractError);
}

TEST(InjectBias, LambdaZeroIsIdentity) {
    numkit::Rng rng(4);
    TokenMatrix logits = rng.normal_tokens(3, 4);
    logits(0, 0) = -0.0;
    const TokenMatrix out = inject_bias(logits, rng.normal_vector(4), 0.0);
    EXPECT_EQ(std::memcmp(out.data(), logits.data(), sizeof(double) * 12), 0);
}

TEST(InjectBias, AddsBiasPerKeyColumn) {
    TokenMatrix logits = TokenMatrix::Zero(2, 3);
    Vector f(3);
    f << -1.22474, 0.0, 1.22474;
    const TokenMatrix out = inject_bias(logits, f, 1.0);
    for (int r = 0; r < 2; ++r) {
        EXPECT_EQ(out(r, 0), -1.22474);
        EXPECT_EQ(out(r, 1), 0.0);
        EXPECT_EQ(out(r, 2), 1.22474);
    }
    EXPECT_THROW(inject_bias(logits, Vector::Zero(2), 1.0), ContractError);
    EXPECT_THROW(inject_bias(logits, f, -1.0), ContractError);
}

TEST(InjectBias, ConstantBiasLeavesWeightsUnchanged) {
    numkit::Rng rng(5);
    const TokenMatrix logits = rng.normal_tokens(4, 6);
    const TokenMatrix shifted = inject_bias(logits, Vector::Constant(6, 3.5), 2.0);
    EXPECT_LE(numkit::max_abs(numkit::softmax_rows(shifted) - numkit::softmax_rows(logits)), 1e-15);
}

struct Instance {
    TokenMatrix q, k, v;
    Vector fmap;
};

Instance make_instance(std::uint64_t seed, Eigen::Index nq, Eigen::Index nk, Eigen::Index d) {
    numkit::Rng rng(seed);
    Instance in{rng.normal_tokens(nq, d), rng.normal_tokens(nk, d), rng.normal_tokens(nk, d), Vector()};
    std::vector<double> s(static_cast<std::size_t>(nk));
    for (auto& x : s) x = rng.uniform(-1.0, 1.0);
    const auto f = standardize(s, 1e-6);
    in.fmap = Eigen::Map<const Vector>(f.data(), nk);
    return in;
}

TEST(SteeredAttention, UnselectedCallIsBitwiseUnsteered) {
    const auto in = make_instance(6, 3, 7, 4);
    SteeringConfig off;
    off.lambda = 0.0;
    const auto base = steered_attention(in.q, in.k, in.v, in.fmap, off, 0, 0, 0);

    SteeringConfig cfg;
    cfg.lambda = 4.0;
    cfg.layers = Selection::only({2});
    const auto gated = steered_attention(in.q, in.k, in.v, in.fmap, cfg, 1, 0, 0);
    EXPECT_FALSE(gated.steered);
    EXPECT_EQ(std::memcmp(gated.output.data(), base.output.data(), sizeof(double) * base.output.size()), 0);
    EXPECT_EQ(std::memcmp(gated.weights.data(), base.weights.data(), sizeof(double) * base.weights.size()), 0);

    cfg.layers = Selection::all();
    cfg.steps = Selection::none();
    const auto empty = steered_attention(in.q, in.k, in.v, in.fmap, cfg, 1, 0, 0);
    EXPECT_EQ(std::memcmp(empty.output.data(), base.output.data(), sizeof(double) * base.output.size()), 0);

    cfg.steps = Selection::all();
    const auto on = steered_attention(in.q, in.k, in.v, in.fmap, cfg, 1, 0, 0);
    EXPECT_TRUE(on.steered);
    EXPECT_GT(numkit::max_abs(on.output - base.output), 0.0);
}

TEST(SteeredAttention, SingleKeyReturnsItsValue) {
    numkit::Rng rng(7);
    const TokenMatrix q = rng.normal_tokens(2, 3);
    const TokenMatrix k = rng.normal_tokens(1, 3);
    const TokenMatrix v = rng.normal_tokens(1, 5);
    for (double lambda : {0.0, 1.0, 100.0}) {
        SteeringConfig cfg;
        cfg.lambda = lambda;
        const auto res = steered_attention(q, k, v, Vector::Constant(1, 0.7), cfg, 0, 0, 0);
        for (int r = 0; r < 2; ++r) EXPECT_LE(numkit::max_abs(res.output.row(r) - v.row(0)), 1e-15);
    }
}

// Oracle: weight of key j for query row r from a direct softmax.
double direct_weight(const Instance& in, Eigen::Index r, Eigen::Index j, double lambda) {
    const double scale = std::sqrt(static_cast<double>(in.q.cols()));
    double z = 0.0;
    double num = 0.0;
    for (Eigen::Index c = 0; c < in.k.rows(); ++c) {
        const double logit = (in.q.row(r).dot(in.k.row(c)) + lambda * in.fmap(c)) / scale;
        const double e = std::exp(logit);
        z += e;
        if (c == j) num = e;
    }
    return num / z;
}

TEST(SteeredAttention, WeightOnTopKeyIncreasesWithLambda) {
    const auto in = make_instance(8, 1, 9, 6);
    Eigen::Index top = 0;
    in.fmap.maxCoeff(&top);
    double prev = -1.0;
    for (double lambda : {0.0, 1.0, 2.0, 4.0, 8.0}) {
        SteeringConfig cfg;
        cfg.lambda = lambda;
        const auto res = steered_attention(in.q, in.k, in.v, in.fmap, cfg, 0, 0, 0);
        const double w = res.weights(0, top);
        EXPECT_NEAR(w, direct_weight(in, 0, top, lambda), 1e-12);
        EXPECT_GT(w, prev);
        prev = w;
    }
}

TEST(SteeredAttention, RowsStayStochasticAndPermutationEquivariant) {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const auto in = make_instance(seed, 3, 8, 4);
        SteeringConfig cfg;
        cfg.lambda = 3.0;
        const auto res = steered_attention(in.q, in.k, in.v, in.fmap, cfg, 0, 0, 0);
        for (Eigen::Index r = 0; r < 3; ++r) ASSERT_NEAR(res.weights.row(r).sum(), 1.0, 1e-12);

        Eigen::PermutationMatrix<Eigen::Dynamic> perm(8);
        perm.setIdentity();
        numkit::Rng rng(seed + 1000);
        for (int i = 7; i > 0; --i) std::swap(perm.indices()(i), perm.indices()(rng.uniform_int(0, i)));
        const TokenMatrix k2 = perm * in.k;
        const TokenMatrix v2 = perm * in.v;
        const Vector f2 = perm * in.fmap;
        const auto res2 = steered_attention(in.q, k2, v2, f2, cfg, 0, 0, 0);
        ASSERT_LE(numkit::max_abs(res2.weights - TokenMatrix(res.weights * perm.transpose())), 1e-14);
        ASSERT_LE(numkit::max_abs(res2.output - res.output), 1e-13);
    }
}

TEST(Selection, ParsesAndRejects) {
    EXPECT_TRUE(Selection::parse("all").is_all());
    EXPECT_TRUE(Selection::parse("none").empty());
    EXPECT_TRUE(Selection::parse("").empty());
    EXPECT_EQ(Selection::parse("3,1,3").indices(), (std::set<int>{1, 3}));
    EXPECT_EQ(Selection::parse("0,2").to_string(), "0,2");
    EXPECT_THROW(Selection::parse("1,-2"), ContractError);
    EXPECT_THROW(Selection::parse("1,,2"), ContractError);
    EXPECT_THROW(Selection::parse("x"), ContractError);
}

TEST(SteeringConfig, ValidatesParameters) {
    SteeringConfig cfg;
    EXPECT_NO_THROW(cfg.validate());
    cfg.epsilon = 0.0;
    EXPECT_THROW(cfg.validate(), ContractError);
    cfg.epsilon = 1e-6;
    cfg.lambda = -1.0;
    EXPECT_THROW(cfg.validate(), ContractError);
}

TEST(ExportTrace, UniformAndOneHot) {
    AttentionTrace trace;
    trace.add({0, 0, 0}, TokenMatrix::Constant(2, 4, 0.25));
    auto map = reduce_trace(trace);
    EXPECT_EQ(map.weights, TokenMatrix::Constant(2, 4, 0.25));

    AttentionTrace hot;
    TokenMatrix w = TokenMatrix::Zero(1, 4);
    w(0, 2) = 1.0;
    hot.add({0, 0, 0}, w);
    map = reduce_trace(hot);
    EXPECT_EQ(map.weights, w);
    std::ostringstream pgm;
    write_heatmap_pgm(pgm, map);
    EXPECT_EQ(pgm.str(), "P2\n4 1\n255\n0 0 255 0\n");
    std::ostringstream csv;
    write_heatmap_csv(csv, map);
    EXPECT_EQ(csv.str(), "query,key_0,key_1,key_2,key_3\n0,0.000000,0.000000,1.000000,0.000000\n");
}

TEST(ExportTrace, AveragesSelectedFragmentsOnly) {
    AttentionTrace trace;
    TokenMatrix a = TokenMatrix::Zero(1, 2);
    a(0, 0) = 1.0;
    TokenMatrix b = TokenMatrix::Zero(1, 2);
    b(0, 1) = 1.0;
    trace.add({0, 0, 0}, a);
    trace.add({1, 0, 0}, b);
    EXPECT_EQ(reduce_trace(trace).weights, TokenMatrix::Constant(1, 2, 0.5));
    EXPECT_EQ(reduce_trace(trace, Selection::only({1})).weights, b);
    EXPECT_THROW(reduce_trace(trace, Selection::only({5})), ContractError);
    EXPECT_THROW(reduce_trace(AttentionTrace{}), ContractError);
    EXPECT_THROW(trace.add({0, 0, 0}, a), ContractError);
    EXPECT_THROW(trace.add({2, 0, 0}, TokenMatrix::Constant(1, 2, 0.7)), ContractError);
}

TEST(ExportTrace, RepeatedExportIsByteIdentical) {
    const auto in = make_instance(9, 4, 6, 3);
    AttentionTrace trace;
    for (int layer = 0; layer < 2; ++layer) {
        SteeringConfig cfg;
        trace.add({layer, 0, 0}, steered_attention(in.q, in.k, in.v, in.fmap, cfg, layer, 0, 0).weights);
    }
    const auto dir = std::filesystem::temp_directory_path() / "genius_steer_test";
    std::filesystem::create_directories(dir);
    export_trace(trace, dir / "a");
    export_trace(trace, dir / "b");
    EXPECT_EQ(read_file(dir / "a.csv"), read_file(dir / "b.csv"));
    EXPECT_EQ(read_file(dir / "a.pgm"), read_file(dir / "b.pgm"));
    EXPECT_FALSE(read_file(dir / "a.csv").empty());
    std::filesystem::remove_all(dir);
}

TEST(HashEmbedder, DeterministicAndWordBased) {
    const HashEmbedder e(16, 1);
    EXPECT_EQ(e.embed("Red Car"), e.embed("red  car"));
    EXPECT_NE(e.embed("car"), e.embed("cat"));
    const auto kw = e.embed_plan(KeywordPlan{{"face, hair", "all", ""}});
    ASSERT_EQ(kw.size(), 1u);
    EXPECT_EQ(kw.at("face, hair").size(), 2u);
}

}  // namespace
}  // namespace genius::steer
