#include "doctest.h"

#include "delala/errors.hpp"
#include "delala/leading_forest.hpp"
#include "delala/log.hpp"

#include "generators.hpp"
#include "invariants.hpp"
#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

using namespace delala;

namespace {

DistanceMatrix line_distances(std::initializer_list<double> xs) {
    return pairwise_distances(testing::line(xs));
}

}  // namespace

TEST_CASE("local_density") {
    SUBCASE("three points on a line") {
        const auto rho = local_density(line_distances({0, 1, 2}), 1.0);
        const double ends = std::exp(-1.0) + std::exp(-4.0);
        CHECK(rho[0] == doctest::Approx(ends).epsilon(1e-12));
        CHECK(rho[1] == doctest::Approx(2.0 * std::exp(-1.0)).epsilon(1e-12));
        CHECK(rho[2] == doctest::Approx(ends).epsilon(1e-12));
        CHECK(rho[0] == doctest::Approx(0.38620).epsilon(1e-4));
        CHECK(rho[1] == doctest::Approx(0.73576).epsilon(1e-4));
    }
    SUBCASE("two identical points") {
        const auto rho = local_density(line_distances({4, 4}), 0.3);
        CHECK(rho == std::vector<double>{1.0, 1.0});
    }
    SUBCASE("joint scaling of distances and bandwidth") {
        const auto ds = testing::gaussian_blobs({25, 2, 2}, 9);
        auto d = pairwise_distances(ds);
        const auto a = local_density(d, 0.7);
        d.values *= 3.5;
        const auto b = local_density(d, 0.7 * 3.5);
        for (std::size_t i = 0; i < a.size(); ++i) {
            CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-9));
        }
    }
    SUBCASE("a single point warns and yields zero") {
        std::string captured;
        const auto previous = set_warning_handler([&](std::string_view m) { captured = m; });
        const auto rho = local_density(line_distances({1}), 1.0);
        set_warning_handler(previous);
        CHECK(rho == std::vector<double>{0.0});
        CHECK_FALSE(captured.empty());
    }
    SUBCASE("non-positive bandwidth") {
        CHECK_THROWS_AS((void)local_density(line_distances({0, 1}), 0.0), config_error);
        CHECK_THROWS_AS((void)local_density(line_distances({0, 1}), -2.0), config_error);
    }
}

TEST_CASE("leading_nodes") {
    SUBCASE("three points on a line") {
        const auto d = line_distances({0, 1, 2});
        const auto rho = local_density(d, 1.0);
        const auto ln = leading_nodes(d, rho);
        CHECK(ln.parent[0] == std::optional<NodeIndex>(1));
        CHECK_FALSE(ln.parent[1].has_value());
        CHECK(ln.parent[2] == std::optional<NodeIndex>(1));
        // The root sits in the middle, so its largest distance is 1.
        CHECK(ln.delta == std::vector<double>{1.0, 1.0, 1.0});
    }
    SUBCASE("two points") {
        const auto d = line_distances({0, 3});
        const std::vector<double> rho = {0.2, 0.5};
        const auto ln = leading_nodes(d, rho);
        CHECK(ln.parent[0] == std::optional<NodeIndex>(1));
        CHECK(ln.delta[0] == 3.0);
    }
    SUBCASE("all points identical") {
        const auto d = line_distances({2, 2, 2, 2});
        const auto rho = local_density(d, 1.0);
        const auto ln = leading_nodes(d, rho);
        CHECK_FALSE(ln.parent[0].has_value());
        for (NodeIndex i = 1; i < 4; ++i) {
            CHECK(ln.parent[i] == std::optional<NodeIndex>(0));
        }
    }
    SUBCASE("matches a full scan on random data") {
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            const auto ds = testing::gaussian_blobs({40, 3, 3, 1.0, 4.0, 0.15}, seed);
            const auto d = pairwise_distances(ds);
            const auto rho = local_density(d, 0.5);
            const auto ln = leading_nodes(d, rho);
            const auto ref = oracle::leading(oracle::to_grid(d.values), rho);
            CHECK(ln.parent == ref.parent);
            CHECK(ln.delta == ref.delta);
        }
    }
}

TEST_CASE("layers") {
    using P = std::vector<std::optional<NodeIndex>>;
    CHECK(layers(P{std::nullopt, 0, 1}) == std::vector<int>{1, 2, 3});
    CHECK(layers(P{std::nullopt, 0, 0, 0, 0, 0}) == std::vector<int>{1, 2, 2, 2, 2, 2});
    CHECK(layers(P{1, std::nullopt, 1}) == std::vector<int>{2, 1, 2});
    CHECK_THROWS_AS((void)layers(P{1, 0}), structural_error);
    CHECK_THROWS_AS((void)layers(P{std::nullopt, 5}), structural_error);
}

TEST_CASE("build_leading_tree on the line example") {
    const auto tree = build_leading_tree(line_distances({0, 1, 2}), 1.0);
    CHECK(tree.layer == std::vector<int>{2, 1, 2});
    CHECK(tree.roots == std::vector<NodeIndex>{1});
    CHECK(tree.global_root == 1);
    CHECK(tree.gamma[1] == doctest::Approx(2.0 * std::exp(-1.0)).epsilon(1e-12));
    CHECK(tree.gamma[1] == doctest::Approx(0.73576).epsilon(1e-4));
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(tree.gamma[i] == tree.rho[i] * tree.delta[i]);
    }
}

TEST_CASE("lodog_cut") {
    SUBCASE("two blobs against a direct evaluation") {
        const auto d = pairwise_distances(testing::two_blob_fixture());
        const auto tree = build_leading_tree(d, 1.0);
        const auto cut = lodog_cut(tree, 0.5, 6);
        const auto brute = oracle::lodog_bruteforce(tree.parent, tree.delta, tree.gamma, 0.5, 6);
        CHECK(cut.granulation.n_g == 2);
        CHECK(brute.best == 2);
        REQUIRE(cut.granulation.objective_curve.size() == 6);
        for (std::size_t k = 0; k < 6; ++k) {
            CHECK(cut.granulation.objective_curve[k] == doctest::Approx(brute.q[k]).epsilon(1e-9));
        }
        const auto& id = cut.forest.tree_id;
        CHECK(id[0] == id[1]);
        CHECK(id[1] == id[2]);
        CHECK(id[3] == id[4]);
        CHECK(id[4] == id[5]);
        CHECK(id[0] != id[3]);
    }
    SUBCASE("weight limits") {
        const auto ds = testing::gaussian_blobs({60, 2, 3}, 4);
        const auto tree = build_leading_tree(pairwise_distances(ds), 0.8);
        CHECK(lodog_cut(tree, 0.999).granulation.n_g == 1);
        const auto low = lodog_cut(tree, 0.001);
        CHECK(low.granulation.n_g == low.granulation.objective_curve.size());
        CHECK(low.granulation.n_g == default_max_granules(60));
    }
    SUBCASE("weight outside (0, 1)") {
        const auto tree = build_leading_tree(line_distances({0, 1, 2}), 1.0);
        CHECK_THROWS_AS((void)lodog_cut(tree, 0.0), config_error);
        CHECK_THROWS_AS((void)lodog_cut(tree, 1.0), config_error);
        CHECK_THROWS_AS((void)lodog_cut(tree, -0.3), config_error);
    }
    SUBCASE("default granule cap") {
        CHECK(default_max_granules(150) == 52);
        CHECK(default_max_granules(10) == 10);
        CHECK(default_max_granules(1484) == 156);
    }
}

TEST_CASE("cutting more nodes refines the forest") {
    const auto ds = testing::gaussian_blobs({80, 2, 4}, 21);
    const auto tree = build_leading_tree(pairwise_distances(ds), 0.6);
    const auto candidates = cut_candidates(tree);
    auto previous = cut_forest(tree, {});
    for (std::size_t k = 1; k <= 10; ++k) {
        const auto next = cut_forest(tree, std::span(candidates).first(k));
        CHECK(next.tree_count() == previous.tree_count() + 1);
        // Every new granule lies inside exactly one old granule.
        for (std::size_t t = 0; t < next.tree_count(); ++t) {
            std::set<std::size_t> parents;
            for (NodeIndex i = 0; i < next.size(); ++i) {
                if (next.tree_id[i] == t) {
                    parents.insert(previous.tree_id[i]);
                }
            }
            CHECK(parents.size() == 1);
        }
        previous = next;
    }
}

TEST_CASE("row permutation leaves the forest unchanged up to relabeling") {
    const auto ds = testing::gaussian_blobs({50, 3, 3}, 13);
    std::vector<std::size_t> perm(ds.size());
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::mt19937_64 rng(5);
    std::shuffle(perm.begin(), perm.end(), rng);
    const auto shuffled = ds.subset(perm);

    const auto a = lodog_cut(build_leading_tree(pairwise_distances(ds), 0.9), 0.4);
    const auto b = lodog_cut(build_leading_tree(pairwise_distances(shuffled), 0.9), 0.4);
    REQUIRE(a.granulation.n_g == b.granulation.n_g);
    for (std::size_t s = 0; s < perm.size(); ++s) {
        const NodeIndex orig = perm[s];
        CHECK(a.forest.rho[orig] == doctest::Approx(b.forest.rho[s]).epsilon(1e-12));
        CHECK(a.forest.delta[orig] == doctest::Approx(b.forest.delta[s]).epsilon(1e-12));
        CHECK(a.forest.gamma[orig] == doctest::Approx(b.forest.gamma[s]).epsilon(1e-12));
        const auto pb = b.forest.parent[s];
        const auto pa = a.forest.parent[orig];
        REQUIRE(pa.has_value() == pb.has_value());
        if (pa) {
            CHECK(*pa == perm[*pb]);
        }
    }
}

TEST_CASE("write_edge_list") {
    const auto tree = build_leading_tree(line_distances({0, 1, 2}), 1.0);
    std::ostringstream out;
    write_edge_list(tree, out);
    std::istringstream in(out.str());
    std::string line;
    std::getline(in, line);
    CHECK(line == "node,parent,rho,delta,gamma,layer,tree_id");
    std::getline(in, line);
    CHECK(line.rfind("0,1,", 0) == 0);
    std::getline(in, line);
    CHECK(line.rfind("1,-1,", 0) == 0);
}
