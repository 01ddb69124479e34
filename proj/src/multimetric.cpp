#include "delala/multimetric.hpp"

#include "delala/errors.hpp"

#include <algorithm>
#include <chrono>
#include <limits>
#include <numeric>
#include <set>
#include <string>
#include <utility>

namespace delala {

namespace {

using clock_type = std::chrono::steady_clock;

double elapsed_ms(clock_type::time_point start) {
    return std::chrono::duration<double, std::milli>(clock_type::now() - start).count();
}

/// A subtree awaiting a node in the recursion tree.
struct Group {
    std::vector<NodeIndex> members;  // global indices, ascending
    NodeIndex root = 0;
    double root_rho = 0.0;  // density in the forest that produced the group
    std::size_t budget = 0;
    std::vector<NodeIndex> labeled;
    std::vector<ClassId> classes;
};

std::vector<NodeIndex> complement_within(std::span<const NodeIndex> members, std::span<const NodeIndex> labeled) {
    const std::set<NodeIndex> taken(labeled.begin(), labeled.end());
    std::vector<NodeIndex> out;
    for (NodeIndex i : members) {
        if (!taken.contains(i)) {
            out.push_back(i);
        }
    }
    return out;
}

/// Ranks `members` by the local XOR composite and draws up to `budget` labels.
void select_in_group(Group& g, const LeadingForest& forest, const LabelOracle& oracle, int class_count,
                     const MultiMetricParams& params) {
    const std::size_t m = g.members.size();
    std::vector<double> gamma(m);
    std::vector<double> rho(m);
    std::vector<int> layer(m);
    for (std::size_t s = 0; s < m; ++s) {
        gamma[s] = forest.gamma[g.members[s]];
        rho[s] = forest.rho[g.members[s]];
        layer[s] = forest.layer[g.members[s]];
    }
    const auto scores = selection_scores(gamma, rho, layer, params.base.w);
    const auto order = conti_xor_small(scores.typicalness, scores.divergence, params.base.w);

    std::vector<std::size_t> per_class(static_cast<std::size_t>(class_count), 0);
    std::vector<std::pair<NodeIndex, ClassId>> skipped;
    auto take = [&](NodeIndex i, ClassId c) {
        g.labeled.push_back(i);
        g.classes.push_back(c);
        ++per_class[static_cast<std::size_t>(c)];
    };
    for (std::size_t s : order) {
        if (g.labeled.size() >= g.budget) {
            break;
        }
        const NodeIndex i = g.members[s];
        const auto c = oracle(i);
        if (!c) {
            continue;
        }
        if (*c < 0 || *c >= class_count) {
            throw data_error("oracle returned class " + std::to_string(*c) + " outside the class range");
        }
        if (params.class_quota && per_class[static_cast<std::size_t>(*c)] >= params.base.k) {
            skipped.emplace_back(i, *c);
            continue;
        }
        take(i, *c);
    }
    for (const auto& [i, c] : skipped) {
        if (g.labeled.size() >= g.budget) {
            break;
        }
        take(i, c);
    }
}

/// Top-level subtrees of `forest`, whose indices map to global ones through `global`.
std::vector<Group> groups_of(const LeadingForest& forest, std::span<const NodeIndex> global) {
    const auto trees = forest.trees();
    std::vector<Group> out(trees.size());
    for (std::size_t t = 0; t < trees.size(); ++t) {
        for (NodeIndex i : trees[t]) {
            out[t].members.push_back(global[i]);
        }
        std::sort(out[t].members.begin(), out[t].members.end());
        out[t].root = global[forest.roots[t]];
        out[t].root_rho = forest.rho[forest.roots[t]];
    }
    return out;
}

class Builder {
public:
    Builder(const Dataset& ds, const DistanceMatrix& dist, const MultiMetricParams& params, const Bandwidths& bw,
            MetricTree& tree, StageTimes& times)
        : ds_(ds), dist_(dist), params_(params), bw_(bw), tree_(tree), times_(times) {}

    std::vector<std::size_t> resolve(std::vector<Group> groups, int depth, std::optional<std::size_t> parent);

private:
    void make_leaf(MetricNode& node);
    std::vector<Group> split(const MetricNode& node);
    void lend(std::span<const std::size_t> ids, std::span<const double> root_rho);
    std::size_t lending_leaf(std::size_t node_id, NodeIndex borrower_root) const;
    std::vector<ClassId> predict(const MetricNode& leaf, std::span<const NodeIndex> points) const;

    const Dataset& ds_;
    const DistanceMatrix& dist_;
    const MultiMetricParams& params_;
    const Bandwidths& bw_;
    MetricTree& tree_;
    StageTimes& times_;
};

std::vector<std::size_t> Builder::resolve(std::vector<Group> groups, int depth, std::optional<std::size_t> parent) {
    std::vector<std::size_t> ids;
    std::vector<double> root_rho;
    for (auto& g : groups) {
        MetricNode node;
        node.id = tree_.nodes.size();
        node.depth = depth;
        node.parent = parent;
        node.root = g.root;
        node.budget = g.budget;
        node.members = std::move(g.members);
        node.labeled = std::move(g.labeled);
        node.labeled_classes = std::move(g.classes);
        node.unlabeled = complement_within(node.members, node.labeled);
        node.local_classes = subtree_class_count(node.labeled_classes);
        ids.push_back(node.id);
        root_rho.push_back(g.root_rho);
        tree_.nodes.push_back(std::move(node));
    }

    for (std::size_t id : ids) {
        if (tree_.nodes[id].labeled.empty()) {
            tree_.nodes[id].kind = LeafKind::borrowed;
            continue;
        }
        const bool mixed = static_cast<std::size_t>(tree_.nodes[id].local_classes) > params_.class_threshold;
        if (mixed && depth + 1 < params_.max_depth) {
            auto children = split(tree_.nodes[id]);
            if (children.size() > 1) {
                tree_.nodes[id].kind = LeafKind::recurse;
                auto child_ids = resolve(std::move(children), depth + 1, id);
                tree_.nodes[id].children = std::move(child_ids);
                continue;
            }
        }
        make_leaf(tree_.nodes[id]);
    }
    lend(ids, root_rho);
    return ids;
}

void Builder::make_leaf(MetricNode& node) {
    const auto start = clock_type::now();
    const std::size_t l = node.labeled.size();
    const int min_metric_labels = std::max(3, params_.base.klmca.p);
    if (node.local_classes == 1) {
        node.kind = LeafKind::constant;
    } else if (l < static_cast<std::size_t>(min_metric_labels)) {
        node.kind = LeafKind::input_nn;
    } else {
        node.kind = LeafKind::klmca;
        DelalaParams local = params_.base;
        if (local.klmca.p > 0) {
            local.klmca.p = std::min(local.klmca.p, static_cast<int>(l) - 1);
        }
        auto mc = train_and_classify(ds_, dist_, node.labeled, node.labeled_classes, node.unlabeled, local,
                                     bw_.kernel);
        times_.training_ms += mc.training_ms;
        times_.inference_ms += mc.inference_ms;
        node.predictions = std::move(mc.predictions);
        node.model = std::move(mc.model);
        return;
    }
    node.predictions = predict(node, node.unlabeled);
    times_.inference_ms += elapsed_ms(start);
}

std::vector<Group> Builder::split(const MetricNode& node) {
    auto start = clock_type::now();
    const auto local = restrict_distances(dist_, node.members);
    const double sigma = distance_percentile(local, params_.base.sigma_percentile);
    const auto cut = lodog_cut(build_leading_tree(local, sigma), params_.base.alpha_lodog);
    auto groups = groups_of(cut.forest, node.members);
    times_.forest_ms += elapsed_ms(start);

    for (auto& g : groups) {
        for (std::size_t s = 0; s < node.labeled.size(); ++s) {
            if (std::binary_search(g.members.begin(), g.members.end(), node.labeled[s])) {
                g.labeled.push_back(node.labeled[s]);
                g.classes.push_back(node.labeled_classes[s]);
            }
        }
        g.budget = g.labeled.size();
    }
    return groups;
}

void Builder::lend(std::span<const std::size_t> ids, std::span<const double> root_rho) {
    // Unlabeled subtrees, densest first, borrow from the nearest denser subtree
    // holding labels; the densest one takes the nearest overall.
    const std::size_t m = ids.size();
    auto denser = [&](std::size_t a, std::size_t b) {
        const NodeIndex ra = tree_.nodes[ids[a]].root;
        const NodeIndex rb = tree_.nodes[ids[b]].root;
        return root_rho[a] > root_rho[b] || (root_rho[a] == root_rho[b] && ra < rb);
    };
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), denser);

    std::vector<char> usable(m, 0);
    for (std::size_t s = 0; s < m; ++s) {
        usable[s] = tree_.nodes[ids[s]].kind != LeafKind::borrowed;
    }
    if (std::none_of(usable.begin(), usable.end(), [](char u) { return u != 0; })) {
        throw propagation_error("no subtree holds a labeled sample");
    }
    for (std::size_t pos = 0; pos < m; ++pos) {
        const std::size_t s = order[pos];
        if (usable[s]) {
            continue;
        }
        const NodeIndex root = tree_.nodes[ids[s]].root;
        std::optional<std::size_t> lender;
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t q = 0; q < m; ++q) {
            if (q == s || !usable[q] || (pos != 0 && !denser(q, s))) {
                continue;
            }
            const double d = dist_(root, tree_.nodes[ids[q]].root);
            if (d < best || (d == best && lender && tree_.nodes[ids[q]].root < tree_.nodes[ids[*lender]].root)) {
                best = d;
                lender = q;
            }
        }
        if (!lender) {
            throw propagation_error("subtree rooted at " + std::to_string(root) +
                                    " found no labeled subtree to borrow from");
        }
        const std::size_t leaf = lending_leaf(ids[*lender], root);
        const auto start = clock_type::now();
        auto predictions = predict(tree_.nodes[leaf], tree_.nodes[ids[s]].unlabeled);
        times_.inference_ms += elapsed_ms(start);
        tree_.nodes[ids[s]].borrowed_from = leaf;
        tree_.nodes[ids[s]].predictions = std::move(predictions);
        usable[s] = 1;
    }
}

std::size_t Builder::lending_leaf(std::size_t node_id, NodeIndex borrower_root) const {
    std::size_t id = node_id;
    while (true) {
        const MetricNode& node = tree_.nodes[id];
        if (node.kind == LeafKind::borrowed) {
            return *node.borrowed_from;
        }
        if (node.kind != LeafKind::recurse) {
            return id;
        }
        // Descend into the child holding the labeled sample nearest to the borrower.
        std::size_t next = node.children.front();
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t child : node.children) {
            for (NodeIndex i : tree_.nodes[child].labeled) {
                if (dist_(borrower_root, i) < best) {
                    best = dist_(borrower_root, i);
                    next = child;
                }
            }
        }
        id = next;
    }
}

std::vector<ClassId> Builder::predict(const MetricNode& leaf, std::span<const NodeIndex> points) const {
    std::vector<ClassId> out(points.size());
    if (points.empty()) {
        return out;
    }
    switch (leaf.kind) {
        case LeafKind::constant:
            std::fill(out.begin(), out.end(), leaf.labeled_classes.front());
            return out;
        case LeafKind::input_nn:
            for (std::size_t q = 0; q < points.size(); ++q) {
                double best = std::numeric_limits<double>::infinity();
                for (std::size_t s = 0; s < leaf.labeled.size(); ++s) {
                    const double d = dist_(points[q], leaf.labeled[s]);
                    if (d < best) {
                        best = d;
                        out[q] = leaf.labeled_classes[s];
                    }
                }
            }
            return out;
        case LeafKind::klmca: {
            const auto& model = *leaf.model;
            const Matrix cross = distance_block(dist_, leaf.labeled, points);
            const Matrix proj_u = project(model, gaussian_kernel(cross, bw_.kernel).values);
            const Matrix proj_l = project(model, model.train_kernel.values);
            return classify_1nn(proj_l, leaf.labeled_classes, proj_u);
        }
        case LeafKind::recurse:
        case LeafKind::borrowed:
            break;
    }
    throw contract_error("predict: node " + std::to_string(leaf.id) + " is not a classifying leaf");
}

}  // namespace

void MultiMetricParams::validate() const {
    base.validate();
    if (max_depth < 1) {
        throw config_error("max_depth must be at least 1");
    }
}

std::string_view to_string(LeafKind kind) {
    switch (kind) {
        case LeafKind::recurse:
            return "recurse";
        case LeafKind::klmca:
            return "klmca";
        case LeafKind::constant:
            return "constant";
        case LeafKind::input_nn:
            return "input_nn";
        case LeafKind::borrowed:
            return "borrowed";
    }
    return "unknown";
}

std::size_t MetricTree::budget_used() const {
    std::size_t total = 0;
    for (std::size_t t = 0; t < top_level && t < nodes.size(); ++t) {
        total += nodes[t].labeled.size();
    }
    return total;
}

std::vector<std::size_t> MetricTree::leaves() const {
    std::vector<std::size_t> out;
    for (const auto& node : nodes) {
        if (node.kind != LeafKind::recurse) {
            out.push_back(node.id);
        }
    }
    return out;
}

int subtree_class_count(std::span<const ClassId> labeled_classes) {
    return static_cast<int>(std::set<ClassId>(labeled_classes.begin(), labeled_classes.end()).size());
}

std::vector<std::size_t> proportional_budget(std::span<const std::size_t> sizes, std::size_t budget) {
    const std::size_t total = std::accumulate(sizes.begin(), sizes.end(), std::size_t{0});
    std::vector<std::size_t> out(sizes.size(), 0);
    if (total == 0) {
        return out;
    }
    std::vector<double> remainder(sizes.size());
    std::size_t assigned = 0;
    for (std::size_t t = 0; t < sizes.size(); ++t) {
        const double quota = static_cast<double>(sizes[t]) * static_cast<double>(budget) / static_cast<double>(total);
        out[t] = std::min(sizes[t], static_cast<std::size_t>(quota));
        remainder[t] = quota - static_cast<double>(out[t]);
        assigned += out[t];
    }
    std::vector<std::size_t> order(sizes.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
    // Full subtrees cannot absorb more; keep cycling until the budget is placed.
    while (assigned < std::min(budget, total)) {
        for (std::size_t t : order) {
            if (assigned >= budget) {
                break;
            }
            if (out[t] < sizes[t]) {
                ++out[t];
                ++assigned;
            }
        }
    }
    return out;
}

MultiMetricResult multi_metric_classify(const Dataset& ds, const DistanceMatrix& dist, const LabelOracle& oracle,
                                        int class_count, const MultiMetricParams& params) {
    params.validate();
    if (dist.size() != ds.size()) {
        throw contract_error("multi_metric_classify: distance matrix does not match the dataset");
    }
    MultiMetricResult out;
    if (class_count <= static_cast<int>(params.class_threshold)) {
        auto flat = run_delala(ds, dist, oracle, class_count, params.base);
        out.classification = flat.classification;
        out.bandwidths = flat.bandwidths;
        out.times = flat.times;
        MetricNode node;
        node.members.resize(ds.size());
        std::iota(node.members.begin(), node.members.end(), NodeIndex{0});
        node.root = flat.forest.global_root;
        node.budget = params.base.l;
        node.labeled = flat.classification.labeled;
        node.labeled_classes = flat.classification.labeled_classes;
        node.unlabeled = flat.classification.unlabeled;
        node.predictions = flat.classification.predictions;
        node.local_classes = subtree_class_count(node.labeled_classes);
        node.kind = LeafKind::klmca;
        node.model = flat.model;
        out.tree.nodes.push_back(std::move(node));
        out.tree.top_level = 1;
        out.flat = std::move(flat);
        return out;
    }
    if (params.base.l > ds.size()) {
        throw infeasible_budget_error("label budget " + std::to_string(params.base.l) + " exceeds sample count " +
                                      std::to_string(ds.size()));
    }

    auto start = clock_type::now();
    out.bandwidths = resolve_bandwidths(dist, params.base);
    auto cut = build_forest(dist, out.bandwidths.sigma, params.base);
    out.forest = std::move(cut.forest);
    out.granulation = std::move(cut.granulation);
    std::vector<NodeIndex> identity(ds.size());
    std::iota(identity.begin(), identity.end(), NodeIndex{0});
    auto groups = groups_of(out.forest, identity);
    out.times.forest_ms = elapsed_ms(start);

    start = clock_type::now();
    std::vector<std::size_t> sizes;
    for (const auto& g : groups) {
        sizes.push_back(g.members.size());
    }
    const auto budgets = proportional_budget(sizes, params.base.l);
    for (std::size_t t = 0; t < groups.size(); ++t) {
        groups[t].budget = budgets[t];
        select_in_group(groups[t], out.forest, oracle, class_count, params);
    }
    out.times.selection_ms = elapsed_ms(start);

    Builder builder(ds, dist, params, out.bandwidths, out.tree, out.times);
    const auto top = builder.resolve(std::move(groups), 0, std::nullopt);
    out.tree.top_level = top.size();

    auto& cls = out.classification;
    for (std::size_t t = 0; t < out.tree.top_level; ++t) {
        const auto& node = out.tree.nodes[t];
        cls.labeled.insert(cls.labeled.end(), node.labeled.begin(), node.labeled.end());
        cls.labeled_classes.insert(cls.labeled_classes.end(), node.labeled_classes.begin(),
                                   node.labeled_classes.end());
    }
    std::vector<std::optional<ClassId>> predicted(ds.size());
    for (std::size_t leaf : out.tree.leaves()) {
        const auto& node = out.tree.nodes[leaf];
        for (std::size_t q = 0; q < node.unlabeled.size(); ++q) {
            predicted[node.unlabeled[q]] = node.predictions[q];
        }
    }
    cls.unlabeled = complement(ds.size(), cls.labeled);
    for (NodeIndex i : cls.unlabeled) {
        if (!predicted[i]) {
            throw structural_error("sample " + std::to_string(i) + " was not classified by any leaf");
        }
        cls.predictions.push_back(*predicted[i]);
    }
    return out;
}

}  // namespace delala
