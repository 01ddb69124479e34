#include "doctest.h"

#include "delala/errors.hpp"
#include "delala/multimetric.hpp"

#include "generators.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <set>

using namespace delala;

namespace {

MultiMetricParams yeast_profile() {
    MultiMetricParams p;
    p.base.w = 0.7;
    p.base.k = 3;
    p.base.l = 50;
    p.base.alpha_lodog = 0.3;
    p.base.klmca.p = 5;
    p.base.klmca.lambda = 0.1;
    return p;
}

double accuracy(const Dataset& truth, const Classification& c) {
    std::size_t hit = 0;
    for (std::size_t i = 0; i < c.unlabeled.size(); ++i) {
        hit += *truth.labels[c.unlabeled[i]] == c.predictions[i] ? 1 : 0;
    }
    return 100.0 * static_cast<double>(hit) / static_cast<double>(c.unlabeled.size());
}

/// Structural checks that hold for every recursion tree.
void check_tree(const Dataset& ds, const MultiMetricResult& r, std::size_t budget) {
    const auto& tree = r.tree;
    const std::size_t n = ds.size();

    std::vector<int> top_cover(n, 0);
    for (std::size_t t = 0; t < tree.top_level; ++t) {
        for (NodeIndex i : tree.nodes[t].members) {
            ++top_cover[i];
        }
    }
    CHECK(std::all_of(top_cover.begin(), top_cover.end(), [](int c) { return c == 1; }));

    for (const auto& node : tree.nodes) {
        std::set<NodeIndex> members(node.members.begin(), node.members.end());
        CHECK(members.size() == node.members.size());
        CHECK(node.labeled.size() == node.labeled_classes.size());
        for (std::size_t q = 0; q < node.labeled.size(); ++q) {
            CHECK(members.count(node.labeled[q]) == 1);
            CHECK(node.labeled_classes[q] == *ds.labels[node.labeled[q]]);
        }
        CHECK(node.labeled.size() + node.unlabeled.size() == node.members.size());
        if (node.kind == LeafKind::recurse) {
            CHECK(node.predictions.empty());
            std::vector<NodeIndex> union_members;
            std::vector<NodeIndex> union_labeled;
            for (std::size_t child : node.children) {
                CHECK(tree.nodes[child].parent == std::optional<std::size_t>(node.id));
                CHECK(tree.nodes[child].depth == node.depth + 1);
                const auto& cm = tree.nodes[child].members;
                union_members.insert(union_members.end(), cm.begin(), cm.end());
                const auto& cl = tree.nodes[child].labeled;
                union_labeled.insert(union_labeled.end(), cl.begin(), cl.end());
            }
            std::sort(union_members.begin(), union_members.end());
            std::sort(union_labeled.begin(), union_labeled.end());
            auto own = node.members;
            std::sort(own.begin(), own.end());
            auto own_labeled = node.labeled;
            std::sort(own_labeled.begin(), own_labeled.end());
            CHECK(union_members == own);
            CHECK(union_labeled == own_labeled);  // recursion reuses labels, never draws new ones
        } else {
            CHECK(node.predictions.size() == node.unlabeled.size());
        }
        if (node.kind == LeafKind::borrowed) {
            CHECK(node.labeled.empty());
            REQUIRE(node.borrowed_from.has_value());
            CHECK(tree.nodes[*node.borrowed_from].kind != LeafKind::recurse);
            CHECK(tree.nodes[*node.borrowed_from].kind != LeafKind::borrowed);
        }
        if (node.kind == LeafKind::constant) {
            REQUIRE_FALSE(node.labeled_classes.empty());
            for (ClassId c : node.predictions) {
                CHECK(c == node.labeled_classes.front());
            }
        }
    }

    std::vector<int> leaf_cover(n, 0);
    for (std::size_t leaf : tree.leaves()) {
        for (NodeIndex i : tree.nodes[leaf].unlabeled) {
            ++leaf_cover[i];
        }
    }
    const std::set<NodeIndex> labeled(r.classification.labeled.begin(), r.classification.labeled.end());
    CHECK(labeled.size() == r.classification.labeled.size());
    CHECK(tree.budget_used() == budget);
    CHECK(labeled.size() == budget);
    for (NodeIndex i = 0; i < n; ++i) {
        CHECK(leaf_cover[i] == (labeled.count(i) ? 0 : 1));
    }
    CHECK(r.classification.predictions.size() == n - budget);
}

}  // namespace

TEST_CASE("proportional_budget") {
    using V = std::vector<std::size_t>;
    CHECK(proportional_budget(V{10, 20, 30}, 6) == V{1, 2, 3});
    CHECK(proportional_budget(V{1, 1, 1}, 2) == V{1, 1, 0});
    CHECK(proportional_budget(V{2, 100}, 50) == V{1, 49});
    CHECK(proportional_budget(V{1, 9}, 5) == V{1, 4});
    CHECK(proportional_budget(V{2, 3}, 10) == V{2, 3});
    CHECK(proportional_budget(V{}, 3).empty());

    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 200; ++trial) {
        std::uniform_int_distribution<std::size_t> count(1, 12);
        std::uniform_int_distribution<std::size_t> size(1, 40);
        V sizes(count(rng));
        for (auto& s : sizes) {
            s = size(rng);
        }
        const std::size_t total = std::accumulate(sizes.begin(), sizes.end(), std::size_t{0});
        const std::size_t budget = std::uniform_int_distribution<std::size_t>(0, total + 5)(rng);
        const auto out = proportional_budget(sizes, budget);
        CHECK(std::accumulate(out.begin(), out.end(), std::size_t{0}) == std::min(budget, total));
        for (std::size_t t = 0; t < sizes.size(); ++t) {
            CHECK(out[t] <= sizes[t]);
        }
    }
}

TEST_CASE("subtree_class_count") {
    const std::vector<ClassId> mixed = {1, 1, 2};
    CHECK(subtree_class_count(mixed) == 2);
    CHECK(subtree_class_count(std::vector<ClassId>{}) == 0);
}

TEST_CASE("few classes fall back to the flat pipeline unchanged") {
    const auto ds = testing::gaussian_blobs({90, 3, 3, 1.0, 3.0}, 5);
    const auto dist = pairwise_distances(ds);
    MultiMetricParams params;
    params.base.l = 12;
    params.base.klmca.lambda = 0.05;
    params.class_threshold = 3;
    const auto multi = multi_metric_classify(ds, dist, dataset_oracle(ds), 3, params);
    const auto flat = run_delala(ds, dist, dataset_oracle(ds), 3, params.base);
    REQUIRE(multi.flat.has_value());
    CHECK(multi.classification.labeled == flat.classification.labeled);
    CHECK(multi.classification.predictions == flat.classification.predictions);
    CHECK(multi.tree.nodes.size() == 1);
    CHECK(multi.tree.nodes[0].kind == LeafKind::klmca);
    REQUIRE(multi.tree.nodes[0].model.has_value());
    CHECK(multi.tree.nodes[0].model->omega == flat.model.omega);
}

TEST_CASE("well separated classes are classified perfectly") {
    // Seven tight, distant blobs: more classes than the threshold, each granule pure.
    testing::BlobSpec spec{140, 2, 7, 0.3, 60.0};
    const auto ds = testing::gaussian_blobs(spec, 14);
    const auto dist = pairwise_distances(ds);
    MultiMetricParams params;
    params.base.l = 28;
    params.base.klmca.lambda = 0.05;
    const auto r = multi_metric_classify(ds, dist, dataset_oracle(ds), 7, params);
    CHECK_FALSE(r.flat.has_value());
    check_tree(ds, r, 28);
    CHECK(accuracy(ds, r.classification) == 100.0);
}

TEST_CASE("partition soundness and budget conservation on random data") {
    std::mt19937_64 rng(2024);
    for (std::uint64_t trial = 0; trial < 12; ++trial) {
        testing::BlobSpec spec;
        spec.n = std::uniform_int_distribution<std::size_t>(80, 220)(rng);
        spec.dims = std::uniform_int_distribution<std::size_t>(2, 5)(rng);
        spec.classes = std::uniform_int_distribution<int>(6, 9)(rng);
        spec.separation = std::uniform_real_distribution<double>(1.0, 5.0)(rng);
        const auto ds = testing::gaussian_blobs(spec, trial);
        const auto dist = pairwise_distances(ds);
        MultiMetricParams params;
        params.base.l = std::uniform_int_distribution<std::size_t>(10, 40)(rng);
        params.base.alpha_lodog = 0.3;
        params.base.klmca.lambda = 0.05;
        params.class_threshold = std::uniform_int_distribution<std::size_t>(2, 5)(rng);
        params.class_quota = trial % 2 == 1;
        const auto r = multi_metric_classify(ds, dist, dataset_oracle(ds), spec.classes, params);
        check_tree(ds, r, params.base.l);
    }
}

TEST_CASE("multimetric on Yeast") {
    const auto ds = zscore_normalize(load_csv(std::string(DELALA_DATA_DIR) + "/yeast.csv"));
    const auto dist = pairwise_distances(ds);
    const auto params = yeast_profile();
    const auto r = multi_metric_classify(ds, dist, dataset_oracle(ds), ds.class_count, params);
    check_tree(ds, r, 50);

    SUBCASE("subtree class counts match a direct tally") {
        for (const auto& node : r.tree.nodes) {
            std::vector<bool> seen(static_cast<std::size_t>(ds.class_count), false);
            int distinct = 0;
            for (NodeIndex i : node.labeled) {
                const auto c = static_cast<std::size_t>(*ds.labels[i]);
                if (!seen[c]) {
                    seen[c] = true;
                    ++distinct;
                }
            }
            CHECK(node.local_classes == distinct);
        }
    }
    SUBCASE("beats the flat pipeline with the same budget") {
        const auto flat = run_delala(ds, dist, dataset_oracle(ds), ds.class_count, params.base);
        CHECK(accuracy(ds, r.classification) >= accuracy(ds, flat.classification));
    }
    SUBCASE("is deterministic") {
        const auto again = multi_metric_classify(ds, dist, dataset_oracle(ds), ds.class_count, params);
        CHECK(again.classification.labeled == r.classification.labeled);
        CHECK(again.classification.predictions == r.classification.predictions);
    }
}

TEST_CASE("MultiMetricParams::validate") {
    MultiMetricParams p;
    CHECK_NOTHROW(p.validate());
    p.max_depth = 0;
    CHECK_THROWS_AS(p.validate(), config_error);
    p = MultiMetricParams{};
    p.base.w = -0.1;
    CHECK_THROWS_AS(p.validate(), config_error);
}
