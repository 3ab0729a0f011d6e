#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "stratgen/lattice.hpp"

using namespace stratgen;

namespace {

// ---------------------------------------------------------------------------
// brute-force set-semantics oracle
//
// A "world" is the set of atoms true of one element (or element pair):
//   top_symbol  -> exactly one symbol          (singletons)
//   has_symbol  -> any symbol set              (all subsets)
//   is_match    -> exactly one boolean         ({true} or {false})
//   symb_at_pos -> {bottom} or a non-empty set of shared positions
// A DNF holds in a world iff some conjunct is contained in it.

using World = std::set<Datum>;

std::vector<World> worlds(FeatureKind k, const std::vector<Datum>& universe) {
    std::vector<World> out;
    switch (k) {
        case FeatureKind::TopSymbol:
            for (const Datum& d : universe) out.push_back({d});
            return out;
        case FeatureKind::IsMatch:
            out.push_back({Datum(true)});
            out.push_back({Datum(false)});
            return out;
        case FeatureKind::HasSymbol:
        case FeatureKind::SymbAtPos: {
            // the bottom atom witnesses "no shared position" and never
            // coexists with a position atom in a world
            std::vector<Datum> base;
            for (const Datum& d : universe)
                if (!is_bottom_datum(d)) base.push_back(d);
            std::size_t n = base.size();
            for (std::size_t mask = 0; mask < (1u << n); ++mask) {
                World w;
                for (std::size_t i = 0; i < n; ++i)
                    if (mask & (1u << i)) w.insert(base[i]);
                if (k == FeatureKind::SymbAtPos && w.empty()) continue;
                out.push_back(std::move(w));
            }
            if (k == FeatureKind::SymbAtPos) out.push_back({Datum(BottomDatum{})});
            return out;
        }
    }
    return out;
}

bool sat(const FeatureData& fd, const World& w) {
    if (fd.is_top) return true;
    for (const Conjunct& c : fd.dnf)
        if (std::includes(w.begin(), w.end(), c.begin(), c.end())) return true;
    return false;
}

std::vector<Datum> universe_for(FeatureKind k) {
    switch (k) {
        case FeatureKind::TopSymbol:
        case FeatureKind::HasSymbol: return {sym("*"), sym("/\\"), sym("\\/"), sym("pure")};
        case FeatureKind::IsMatch: return {Datum(false), Datum(true)};
        case FeatureKind::SymbAtPos: return {pos1(1), pos1(2), pos1(3), Datum(BottomDatum{})};
    }
    return {};
}

FeatureData random_fd(FeatureKind k, std::mt19937& rng) {
    std::uniform_int_distribution<int> kind(0, 11);
    int pick = kind(rng);
    if (pick == 0) return FeatureData::top();
    if (pick == 1) return FeatureData::bottom();
    auto uni = universe_for(k);
    std::uniform_int_distribution<int> n_conj(1, 3);
    std::uniform_int_distribution<int> n_atom(1, 2);
    std::uniform_int_distribution<std::size_t> atom(0, uni.size() - 1);
    Dnf dnf;
    int conjuncts = n_conj(rng);
    for (int i = 0; i < conjuncts; ++i) {
        Conjunct c;
        int atoms = n_atom(rng);
        for (int j = 0; j < atoms; ++j) c.insert(uni[atom(rng)]);
        dnf.push_back(std::move(c));
    }
    return canonicalise(k, FeatureData::of(std::move(dnf)));
}

const FeatureKind kAllKinds[] = {FeatureKind::TopSymbol, FeatureKind::HasSymbol,
                                 FeatureKind::IsMatch, FeatureKind::SymbAtPos};

FeatureData fd(FeatureKind k, const std::string& text) { return parse_feature_data(text, k); }

// the running worked trio of classes
GoalClass c1() {
    return parse_goal_class("{top_symbol: [[*]], has_symbol: [[*,/\\],[\\/,*]]}", "C1");
}
GoalClass c2() {
    return parse_goal_class("{top_symbol: [[/\\]], has_symbol: [[*,/\\],[\\/,*]]}", "C2");
}
GoalClass c3() {
    return parse_goal_class("{top_symbol: [[*]], has_symbol: [[*,/\\,\\/]]}", "C3");
}

}  // namespace

TEST_CASE("sem yields the absorption-minimised antichain, with Top marked") {
    auto a = sym("a"), b = sym("b"), c = sym("c");
    auto s = sem(FeatureKind::HasSymbol, FeatureData::of({{a, b}, {c}}));
    REQUIRE(s);
    CHECK(*s == std::vector<Conjunct>{{a, b}, {c}});
    // absorption: [[a],[a,b]] collapses to [[a]]
    s = sem(FeatureKind::HasSymbol, FeatureData::of({{a}, {a, b}}));
    REQUIRE(s);
    CHECK(*s == std::vector<Conjunct>{{a}});
    CHECK(sem(FeatureKind::HasSymbol, FeatureData::bottom())->empty());
    CHECK(!sem(FeatureKind::HasSymbol, FeatureData::top()).has_value());  // the universal set
}

TEST_CASE("DNF canonicalisation") {
    // absorption: a superset conjunct is dropped
    CHECK(fd(FeatureKind::HasSymbol, "[[*],[*,/\\]]") == fd(FeatureKind::HasSymbol, "[[*]]"));
    // duplicate conjuncts collapse
    CHECK(fd(FeatureKind::HasSymbol, "[[*],[*]]") == fd(FeatureKind::HasSymbol, "[[*]]"));
    // a conjunct of two distinct top symbols is unsatisfiable
    CHECK(fd(FeatureKind::TopSymbol, "[[*,/\\]]").is_bottom());
    // bottom mixed with anything else is unsatisfiable
    CHECK(fd(FeatureKind::SymbAtPos, "[[bot,1]]").is_bottom());
    // an empty conjunct means "always" and collapses to top
    CHECK(fd(FeatureKind::HasSymbol, "[[]]").is_top);
    // two distinct booleans cannot hold together
    CHECK(fd(FeatureKind::IsMatch, "[[true,false]]").is_bottom());
}

TEST_CASE("feature meet and join reproduce the worked examples") {
    // top_symbol: [[/\]] meet [[*]] is empty
    CHECK(meet_f(FeatureKind::TopSymbol, fd(FeatureKind::TopSymbol, "[[/\\]]"),
                 fd(FeatureKind::TopSymbol, "[[*]]"))
              .is_bottom());
    // has_symbol: [[*,/\],[\/,*]] meet [[*,/\,\/]] = [[*,/\,\/]]
    CHECK(meet_f(FeatureKind::HasSymbol, fd(FeatureKind::HasSymbol, "[[*,/\\],[\\/,*]]"),
                 fd(FeatureKind::HasSymbol, "[[*,/\\,\\/]]")) ==
          fd(FeatureKind::HasSymbol, "[[*,/\\,\\/]]"));
    // joins of the same pair of classes
    CHECK(join_f(FeatureKind::TopSymbol, fd(FeatureKind::TopSymbol, "[[*]]"),
                 fd(FeatureKind::TopSymbol, "[[/\\]]")) ==
          fd(FeatureKind::TopSymbol, "[[/\\],[*]]"));
    CHECK(join_f(FeatureKind::HasSymbol, fd(FeatureKind::HasSymbol, "[[*,/\\],[\\/,*]]"),
                 fd(FeatureKind::HasSymbol, "[[*,/\\,\\/]]")) ==
          fd(FeatureKind::HasSymbol, "[[*,/\\],[\\/,*]]"));
    // identities
    std::mt19937 rng(3);
    for (int i = 0; i < 50; ++i)
        for (FeatureKind k : kAllKinds) {
            FeatureData x = random_fd(k, rng);
            CHECK(meet_f(k, x, FeatureData::top()) == canonicalise(k, x));
            CHECK(join_f(k, x, FeatureData::bottom()) == canonicalise(k, x));
        }
}

TEST_CASE("lattice laws hold on a randomized corpus") {
    std::mt19937 rng(17);
    for (FeatureKind k : kAllKinds) {
        for (int i = 0; i < 400; ++i) {
            FeatureData x = random_fd(k, rng), y = random_fd(k, rng), z = random_fd(k, rng);
            // commutativity
            CHECK(meet_f(k, x, y) == meet_f(k, y, x));
            CHECK(join_f(k, x, y) == join_f(k, y, x));
            // associativity
            CHECK(meet_f(k, x, meet_f(k, y, z)) == meet_f(k, meet_f(k, x, y), z));
            CHECK(join_f(k, x, join_f(k, y, z)) == join_f(k, join_f(k, x, y), z));
            // idempotence
            CHECK(meet_f(k, x, x) == canonicalise(k, x));
            CHECK(join_f(k, x, x) == canonicalise(k, x));
            // absorption both ways
            CHECK(join_f(k, x, meet_f(k, x, y)) == canonicalise(k, x));
            CHECK(meet_f(k, x, join_f(k, x, y)) == canonicalise(k, x));
        }
    }
}

TEST_CASE("meet and join agree with the brute-force membership oracle") {
    std::mt19937 rng(23);
    for (FeatureKind k : kAllKinds) {
        auto ws = worlds(k, universe_for(k));
        for (int i = 0; i < 300; ++i) {
            FeatureData x = random_fd(k, rng), y = random_fd(k, rng);
            FeatureData m = meet_f(k, x, y), j = join_f(k, x, y);
            for (const World& w : ws) {
                CHECK(sat(m, w) == (sat(x, w) && sat(y, w)));
                CHECK(sat(j, w) == (sat(x, w) || sat(y, w)));
            }
        }
    }
}

TEST_CASE("subtype is equivalent to the meet equalling the smaller side") {
    std::mt19937 rng(29);
    for (FeatureKind k : kAllKinds)
        for (int i = 0; i < 200; ++i) {
            FeatureData x = random_fd(k, rng), y = random_fd(k, rng);
            CHECK(feature_subtype(k, x, y) == (meet_f(k, x, y) == canonicalise(k, x)));
        }
}

TEST_CASE("class-level worked examples") {
    // C2 and C3 are orthogonal via top_symbol
    CHECK(class_orthogonal(c2(), c3()));
    CHECK(!class_orthogonal(c1(), c3()));
    // the normative subtype check: C3 <: C1
    CHECK(class_subtype(c3(), c1()));
    CHECK(!class_subtype(c1(), c3()));
    // reflexivity
    CHECK(class_subtype(c1(), c1()));
    // the meet of C2 and C3 bottoms out on top_symbol
    CHECK(class_meet(c2(), c3()).at("top_symbol").is_bottom());
    // the computed generalised class of the worked generalisation
    GoalClass joined = class_join(c2(), c3());
    CHECK(joined.at("top_symbol") == fd(FeatureKind::TopSymbol, "[[/\\],[*]]"));
    CHECK(joined.at("has_symbol") == fd(FeatureKind::HasSymbol, "[[*,/\\],[\\/,*]]"));
    // identity laws lifted to classes (content equality; labels merge)
    CHECK(class_content_compare(class_meet(c1(), top_class()), c1()) == 0);
    CHECK(class_content_compare(class_join(c1(), bottom_class()), c1()) == 0);
}

TEST_CASE("class matchers") {
    Term concl = parse_term("(((c * ((f /\\ e) /\\ e)) * d) * b) * a");
    Term hyp_h = parse_term("c * ((f * (d * b) /\\ e) /\\ e) * a");
    Term hyp_p = parse_term("pure(e)");

    GoalClass concl_class = parse_goal_class("{top_symbol: [[*]], has_symbol: [[*,/\\]]}");
    CHECK(match_class(concl_class, concl));
    CHECK(match_class(concl_class, hyp_h));
    CHECK(!match_class(concl_class, hyp_p));

    GoalClass pure_only = parse_goal_class("{has_symbol: [[pure]]}");
    CHECK(match_class(pure_only, hyp_p));
    CHECK(!match_class(pure_only, hyp_h));

    GoalClass either = parse_goal_class("{has_symbol: [[pure],[*]]}");
    CHECK(match_class(either, hyp_p));
    CHECK(match_class(either, hyp_h));
    CHECK(match_class(either, concl));

    CHECK(match_class(top_class(), hyp_p));
    CHECK(!match_class(bottom_class(), hyp_p));
}

TEST_CASE("generalisation is the least upper bound over a 3-atom enumeration") {
    // enumerate every canonical FeatureData over a 3-atom universe
    for (FeatureKind k : {FeatureKind::HasSymbol, FeatureKind::TopSymbol}) {
        std::vector<Datum> uni{sym("*"), sym("/\\"), sym("pure")};
        std::vector<Conjunct> all_conjuncts;
        for (std::size_t mask = 1; mask < 8; ++mask) {
            Conjunct c;
            for (std::size_t i = 0; i < 3; ++i)
                if (mask & (1u << i)) c.insert(uni[i]);
            all_conjuncts.push_back(std::move(c));
        }
        std::set<FeatureData> values;
        values.insert(FeatureData::top());
        for (std::size_t mask = 0; mask < (1u << all_conjuncts.size()); ++mask) {
            Dnf dnf;
            for (std::size_t i = 0; i < all_conjuncts.size(); ++i)
                if (mask & (1u << i)) dnf.push_back(all_conjuncts[i]);
            values.insert(canonicalise(k, FeatureData::of(std::move(dnf))));
        }
        for (const FeatureData& x : values)
            for (const FeatureData& y : values) {
                FeatureData j = join_f(k, x, y);
                CHECK(feature_subtype(k, x, j));
                CHECK(feature_subtype(k, y, j));
                for (const FeatureData& z : values)
                    if (feature_subtype(k, x, z) && feature_subtype(k, y, z))
                        CHECK(feature_subtype(k, j, z));
            }
    }
}

TEST_CASE("matcher/lattice coherence: subtypes match less") {
    std::mt19937 rng(31);
    std::vector<Term> terms;
    for (const char* s : {"a", "pure(e)", "a * b", "a /\\ b", "a * (b /\\ c)", "(a * b) /\\ c",
                          "pure(a * b)", "c * ((f * (d * b) /\\ e) /\\ e) * a"})
        terms.push_back(parse_term(s));

    for (int i = 0; i < 300; ++i) {
        GoalClass cls1;
        cls1.label = "x";
        cls1.features.emplace("top_symbol", random_fd(FeatureKind::TopSymbol, rng));
        cls1.features.emplace("has_symbol", random_fd(FeatureKind::HasSymbol, rng));
        GoalClass extra;
        extra.label = "x";
        extra.features.emplace("top_symbol", random_fd(FeatureKind::TopSymbol, rng));
        extra.features.emplace("has_symbol", random_fd(FeatureKind::HasSymbol, rng));
        GoalClass cls2 = class_join(cls1, extra);  // cls1 <: cls2 by construction
        REQUIRE(class_subtype(cls1, cls2));
        for (const Term& e : terms)
            if (match_class(cls1, e)) CHECK(match_class(cls2, e));
    }
    // the same statement for link features
    for (int i = 0; i < 300; ++i) {
        for (FeatureKind k : {FeatureKind::IsMatch, FeatureKind::SymbAtPos}) {
            FeatureData d1 = random_fd(k, rng);
            FeatureData d2 = join_f(k, d1, random_fd(k, rng));
            std::uniform_int_distribution<std::size_t> pick(0, terms.size() - 1);
            const Term& e1 = terms[pick(rng)];
            const Term& e2 = terms[pick(rng)];
            std::string name = k == FeatureKind::IsMatch ? "is_match" : "symb_at_pos";
            if (match_link_feature(name, d1, e1, e2)) CHECK(match_link_feature(name, d2, e1, e2));
        }
    }
}

TEST_CASE("gen_map joins by label and enforces the retention rule") {
    GoalClass h1 = parse_goal_class("{top_symbol: [[*]], has_symbol: [[*]]}", "H");
    GoalClass h2 = parse_goal_class("{top_symbol: [[*]], has_symbol: [[*,/\\]]}", "H");
    GoalClass p = parse_goal_class("{top_symbol: [[pure]], has_symbol: [[pure]]}", "P");

    SECTION("classes pair by provenance label") {
        auto out = gen_map({h1, p}, {h2, p});
        REQUIRE(out.size() == 2);
        CHECK(out[0].label == "H");
        CHECK(out[0].at("has_symbol") == fd(FeatureKind::HasSymbol, "[[*]]"));
        CHECK(out[1].label == "P");
    }
    SECTION("unpaired classes pass through") {
        auto out = gen_map({h1}, {p});
        REQUIRE(out.size() == 2);
    }
    SECTION("a subtype overlapping its supertype is dropped") {
        // different labels, h2 <: h1 (h1's has_symbol is weaker), not orthogonal
        GoalClass q = h2;
        q.label = "Q";
        auto out = gen_map({h1}, {q});
        REQUIRE(out.size() == 1);
        CHECK(out[0].label == "H");
        CHECK(out[0] == h1);
    }
    SECTION("duplicate labels within one set are a pairing failure") {
        GoalClass dup = p;
        dup.label = "H";
        CHECK_THROWS_AS(gen_map({h1, dup}, {}), gen_map_failure);
    }
}

TEST_CASE("feature data prints canonically and round-trips") {
    std::mt19937 rng(37);
    for (FeatureKind k : kAllKinds)
        for (int i = 0; i < 200; ++i) {
            FeatureData x = random_fd(k, rng);
            CHECK(parse_feature_data(to_text(x), k) == x);
        }
    CHECK(to_text(fd(FeatureKind::TopSymbol, "[[*],[/\\]]")) == "[[*],[/\\]]");
    CHECK(to_text(FeatureData::top()) == "top");
    CHECK(to_text(FeatureData::bottom()) == "bot");
    CHECK(to_text(fd(FeatureKind::SymbAtPos, "[[bot],[1]]")) == "[[bot],[1]]");
}
