#include <doctest.h>

#include <set>
#include <stdexcept>

#include "oracles.hpp"
#include "ppkit/csv.hpp"
#include "ppkit/ingestion.hpp"

using namespace ppkit;

namespace {

const std::string kDemo = std::string(PPKIT_SOURCE_DIR) + "/data/linkedin_demo.csv";

std::string temp_csv(const std::string& name, const std::string& text) {
    static const auto dir = oracle::scratch_dir("ingestion");
    return oracle::write_file(dir / name, text);
}

FeatureDomainSpec categorical(const std::string& column, Normalization n = Normalization::None) {
    FeatureDomainSpec spec;
    spec.columns = {{column, FeatureKind::Categorical}};
    spec.normalize = n;
    return spec;
}

}  // namespace

TEST_CASE("first-appearance indexing of types") {
    auto path = temp_csv("three.csv", "id,time,event\nu,25,A\nu,27,B\nu,28,A\n");
    auto db = load_sequences_csv(path, {});
    CHECK(db.num_types == 2);
    REQUIRE(db.sequences.size() == 1);
    CHECK(db.sequences[0].events == std::vector<std::size_t>{0, 1, 0});
    CHECK(db.sequences[0].times == std::vector<double>{25, 27, 28});
    CHECK(db.sequences[0].t_start == 25);
    CHECK(db.sequences[0].t_stop == 28);
    CHECK_FALSE(db.sequences[0].seq_feature);
    CHECK_FALSE(db.event_features);
    CHECK(validate_database(db).empty());
}

TEST_CASE("demo job-hopping file with an extra column loads") {
    auto db = load_sequences_csv(kDemo, {});
    CHECK(db.sequences.size() == 40);
    CHECK(db.num_types == 6);
    CHECK(db.num_events() == 234);
    CHECK(validate_database(db).empty());
    for (const auto& s : db.sequences) {
        CHECK_FALSE(s.seq_feature);
        CHECK(s.t_start == s.times.front());
        CHECK(s.t_stop == s.times.back());
    }
}

TEST_CASE("header-only and empty files have no events") {
    CHECK_THROWS_WITH_AS(load_sequences_csv(temp_csv("header.csv", "id,time,event\n"), {}), "no events",
                         std::invalid_argument);
    CHECK_THROWS_WITH_AS(load_sequences_csv(temp_csv("empty.csv", ""), {}), "no events", std::invalid_argument);
}

TEST_CASE("missing column and bad time cell") {
    auto path = temp_csv("nocol.csv", "id,when,event\nu,1,A\n");
    CHECK_THROWS_WITH_AS(load_sequences_csv(path, {}), doctest::Contains("'time'"), std::invalid_argument);
    auto bad = temp_csv("badtime.csv", "id,time,event\nu,1,A\nu,soon,B\n");
    CHECK_THROWS_WITH_AS(load_sequences_csv(bad, {}), doctest::Contains("row 3"), std::invalid_argument);
}

TEST_CASE("stable sort keeps file order on ties and groups interleaved ids") {
    auto path = temp_csv("ties.csv", "id,time,event\na,2,X\nb,1,Y\na,1,Z\na,1,X\nb,0,X\n");
    auto db = load_sequences_csv(path, {});
    CHECK(db.idx2seq == std::vector<std::string>{"a", "b"});
    CHECK(db.idx2type == std::vector<std::string>{"X", "Y", "Z"});
    CHECK(db.sequences[0].times == std::vector<double>{1, 1, 2});
    CHECK(db.sequences[0].events == std::vector<std::size_t>{2, 0, 0});
    CHECK(db.sequences[1].events == std::vector<std::size_t>{0, 1});
}

TEST_CASE("custom mapping, quoted fields and window columns") {
    auto path = temp_csv("mapped.csv",
                         "user,t,kind,lo,hi\n\"u,1\",3,\"a \"\"b\"\"\",0,10\n\"u,1\",4,c,0,12\n");
    ColumnMapping m{"user", "t", "kind", "lo", "hi"};
    auto db = load_sequences_csv(path, m);
    CHECK(db.idx2seq == std::vector<std::string>{"u,1"});
    CHECK(db.idx2type[0] == "a \"b\"");
    CHECK(db.sequences[0].t_start == 0.0);
    CHECK(db.sequences[0].t_stop == 12.0);
    ColumnMapping dup{"x", "x", "y", "", ""};
    CHECK_THROWS_AS(dup.validate(), std::invalid_argument);
}

TEST_CASE("sequence features: multi-hot accumulates every value of the sequence") {
    auto path = temp_csv("titles.csv", "id,time,event,title\nu,1,A,Eng\nu,2,B,Eng\nu,3,A,Mgr\nv,1,A,Eng\n");
    auto db = load_sequences_csv(path, {});
    auto out = load_seq_features_csv(path, "id", categorical("title"), db);
    CHECK(*out.sequences[0].seq_feature == std::vector<double>{1.0, 1.0});
    CHECK(*out.sequences[1].seq_feature == std::vector<double>{1.0, 0.0});
    for (std::size_t s = 0; s < db.sequences.size(); ++s) {
        CHECK(out.sequences[s].times == db.sequences[s].times);
        CHECK(out.sequences[s].events == db.sequences[s].events);
    }
}

TEST_CASE("demo titles as unnormalized categorical sequence features") {
    auto db = load_sequences_csv(kDemo, {});
    auto out = load_seq_features_csv(kDemo, "id", categorical("option1"), db);
    const auto table = csv::read_file(kDemo);
    const auto id_col = table.column("id");
    const auto title_col = table.column("option1");
    std::vector<std::string> values;
    for (const auto& row : table.rows) {
        if (std::find(values.begin(), values.end(), row[title_col]) == values.end()) values.push_back(row[title_col]);
    }
    REQUIRE(out.seq_feature_dim() == values.size());
    std::vector<std::set<std::string>> seen(db.sequences.size());
    for (const auto& row : table.rows) seen[db.seq2idx.at(row[id_col])].insert(row[title_col]);
    for (std::size_t s = 0; s < db.sequences.size(); ++s) {
        for (std::size_t d = 0; d < values.size(); ++d) {
            CHECK((*out.sequences[s].seq_feature)[d] == (seen[s].count(values[d]) ? 1.0 : 0.0));
        }
    }
}

TEST_CASE("numerical features: mean of rows and normalizations") {
    auto path = temp_csv("num.csv", "id,x\nu,3.5\nv,1\nv,3\nw,10\n");
    Database db;
    for (auto n : {"u", "v", "w"}) db.add_sequence(n, {});
    FeatureDomainSpec spec;
    spec.columns = {{"x", FeatureKind::Numerical}};
    auto plain = load_seq_features_csv(path, "id", spec, db);
    CHECK(*plain.sequences[0].seq_feature == std::vector<double>{3.5});
    CHECK(*plain.sequences[1].seq_feature == std::vector<double>{2.0});

    spec.normalize = Normalization::MinMax;
    auto mm = load_seq_features_csv(path, "id", spec, db);
    CHECK((*mm.sequences[0].seq_feature)[0] == doctest::Approx(1.5 / 8.0));
    CHECK((*mm.sequences[1].seq_feature)[0] == 0.0);
    CHECK((*mm.sequences[2].seq_feature)[0] == 1.0);

    spec.normalize = Normalization::ZScore;
    auto z = load_seq_features_csv(path, "id", spec, db);
    double sum = 0.0, sq = 0.0;
    for (const auto& s : z.sequences) {
        sum += (*s.seq_feature)[0];
        sq += (*s.seq_feature)[0] * (*s.seq_feature)[0];
    }
    CHECK(sum == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(sq / 3.0 == doctest::Approx(1.0));
}

TEST_CASE("sequences absent from the feature file get zeros") {
    auto path = temp_csv("partial.csv", "id,title\nu,Eng\n");
    Database db;
    db.add_sequence("u", {});
    db.add_sequence("v", {});
    auto out = load_seq_features_csv(path, "id", categorical("title"), db);
    CHECK(*out.sequences[1].seq_feature == std::vector<double>{0.0});
}

TEST_CASE("sequence feature errors") {
    Database db;
    db.add_sequence("u", {});
    auto unknown = temp_csv("unknown_seq.csv", "id,x\nu,1\nzz,2\n");
    FeatureDomainSpec spec;
    spec.columns = {{"x", FeatureKind::Numerical}};
    CHECK_THROWS_WITH_AS(load_seq_features_csv(unknown, "id", spec, db), doctest::Contains("row 3"),
                         std::invalid_argument);
    auto text = temp_csv("text_num.csv", "id,x\nu,abc\n");
    CHECK_THROWS_AS(load_seq_features_csv(text, "id", spec, db), std::invalid_argument);
    CHECK_THROWS_AS(load_seq_features_csv(text, "id", FeatureDomainSpec{}, db), std::invalid_argument);
    CHECK_THROWS_AS(load_seq_features_csv(text, "id", spec, Database{}), std::invalid_argument);
}

TEST_CASE("event features keyed by type") {
    auto path = temp_csv("ev.csv", "id,time,event,dept\nu,1,A,Eng\nu,2,B,Sales\nu,3,A,Eng\n");
    auto db = load_sequences_csv(path, {});
    auto out = load_event_features_csv(path, "event", categorical("dept"), db);
    REQUIRE(out.event_features);
    CHECK(out.event_features->rows == 2);
    CHECK(out.event_features->cols == 2);
    CHECK(out.event_features->at(0, 0) == 1.0);
    CHECK(out.event_features->at(1, 0) == 0.0);
    CHECK(validate_database(out).empty());
    CHECK(out.sequences == db.sequences);

    CHECK_THROWS_AS(load_event_features_csv(path, "event", categorical("dept"), Database{}), std::invalid_argument);
    auto unseen = temp_csv("ev_unseen.csv", "event,dept\nA,Eng\nQ,Eng\n");
    CHECK_THROWS_WITH_AS(load_event_features_csv(unseen, "event", categorical("dept"), db),
                         doctest::Contains("row 3"), std::invalid_argument);
}

TEST_CASE("loading is deterministic") {
    auto a = load_seq_features_csv(kDemo, "id", categorical("option1", Normalization::ZScore),
                                   load_sequences_csv(kDemo, {}));
    auto b = load_seq_features_csv(kDemo, "id", categorical("option1", Normalization::ZScore),
                                   load_sequences_csv(kDemo, {}));
    CHECK(a == b);
}

TEST_CASE("parse helpers") {
    CHECK(parse_feature_kind("categorical") == FeatureKind::Categorical);
    CHECK(parse_normalization("zscore") == Normalization::ZScore);
    CHECK_THROWS_AS(parse_normalization("log"), std::invalid_argument);
    CHECK(csv::format_double(0.1) == "0.1");
    CHECK(csv::parse_double(" 2.5 ") == 2.5);
    CHECK_FALSE(csv::parse_double("2.5x"));
}
