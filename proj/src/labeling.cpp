#include "delala/labeling.hpp"

#include "delala/errors.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <string>

namespace delala {

namespace {

constexpr double gamma_floor = 1.0 + 1e-6;

// Stable LSD radix sort on the IEEE bit pattern: composite descending, ties by
// ascending index. Linear in n, which keeps selection cost proportional to n.
std::vector<std::size_t> descending_order(const std::vector<double>& keys) {
    const std::size_t n = keys.size();
    std::vector<std::uint64_t> code(n);
    for (std::size_t i = 0; i < n; ++i) {
        // Adding 0.0 folds -0.0 into +0.0 so both compare equal.
        auto bits = std::bit_cast<std::uint64_t>(keys[i] + 0.0);
        bits = (bits >> 63) != 0 ? ~bits : bits | (std::uint64_t{1} << 63);
        code[i] = ~bits;  // ascending code order is descending key order
    }
    std::vector<std::pair<std::uint64_t, std::size_t>> items(n), scratch(n);
    for (std::size_t i = 0; i < n; ++i) {
        items[i] = {code[i], i};
    }
    for (int shift = 0; shift < 64; shift += 8) {
        std::array<std::size_t, 257> count{};
        for (const auto& item : items) {
            ++count[((item.first >> shift) & 0xFF) + 1];
        }
        if (n == 0 || count[((items[0].first >> shift) & 0xFF) + 1] == n) {
            continue;  // every key shares this digit
        }
        std::partial_sum(count.begin(), count.end(), count.begin());
        for (const auto& item : items) {
            scratch[count[(item.first >> shift) & 0xFF]++] = item;
        }
        items.swap(scratch);
    }
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) {
        order[i] = items[i].second;
    }
    return order;
}

}  // namespace

std::vector<double> min_max_normalize(std::span<const double> values) {
    std::vector<double> out(values.size(), 0.0);
    if (values.empty()) {
        return out;
    }
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    const double span = *hi - *lo;
    if (!(span > 0.0)) {
        return out;
    }
    for (std::size_t i = 0; i < values.size(); ++i) {
        out[i] = (values[i] - *lo) / span;
    }
    return out;
}

SelectionScores selection_scores(std::span<const double> gamma, std::span<const double> rho,
                                 std::span<const int> layer, double w) {
    if (!(w >= 0.0 && w <= 1.0)) {
        throw config_error("selection weight w must lie in [0, 1]");
    }
    const std::size_t n = gamma.size();
    if (rho.size() != n || layer.size() != n) {
        throw contract_error("selection_scores: gamma, rho and layer differ in length");
    }
    SelectionScores s;
    s.w = w;
    s.typicalness.resize(n);
    s.divergence.resize(n);
    const auto unit = min_max_normalize(gamma);
    for (std::size_t i = 0; i < n; ++i) {
        // Rescaled gamma stays above 1 so that log(gamma') > 0.
        const double g = gamma_floor + unit[i] * (std::numbers::e - gamma_floor);
        s.typicalness[i] = 1.0 / std::log(g);
        s.divergence[i] = rho[i] / static_cast<double>(layer[i]);
    }
    s.typicalness_norm = min_max_normalize(s.typicalness);
    s.divergence_norm = min_max_normalize(s.divergence);
    return s;
}

SelectionScores selection_scores(const LeadingForest& forest, double w) {
    return selection_scores(forest.gamma, forest.rho, forest.layer, w);
}

XorRanking conti_xor_rank(std::span<const double> a, std::span<const double> b, double w) {
    if (a.size() != b.size()) {
        throw contract_error("conti_xor_small: arrays differ in length");
    }
    if (!(w >= 0.0 && w <= 1.0)) {
        throw config_error("XOR weight w must lie in [0, 1]");
    }
    const auto an = min_max_normalize(a);
    const auto bn = min_max_normalize(b);
    XorRanking r;
    const std::size_t n = a.size();
    r.a_term.resize(n);
    r.b_term.resize(n);
    r.composite.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        r.a_term[i] = w * an[i] * (1.0 - bn[i]);
        r.b_term[i] = (1.0 - w) * bn[i] * (1.0 - an[i]);
        r.composite[i] = r.a_term[i] + r.b_term[i];
    }
    r.order = descending_order(r.composite);
    return r;
}

std::vector<std::size_t> conti_xor_small(std::span<const double> a, std::span<const double> b, double w) {
    return conti_xor_rank(a, b, w).order;
}

std::string_view to_string(Role role) {
    return role == Role::central ? "central" : "divergent";
}

LabelOracle dataset_oracle(const Dataset& ds) {
    return [&ds](NodeIndex i) { return ds.labels.at(i); };
}

SelectionResult select_labeled(const LabelOracle& oracle, int class_count, const SelectionScores& scores,
                               std::size_t l, std::size_t k) {
    if (class_count < 1) {
        throw config_error("selection needs at least one class");
    }
    const std::size_t quota_total = k * static_cast<std::size_t>(class_count);
    if (l < quota_total) {
        throw infeasible_budget_error("label budget " + std::to_string(l) + " is below k * C = " +
                                      std::to_string(quota_total));
    }
    const std::size_t n = scores.typicalness.size();
    if (l > n) {
        throw infeasible_budget_error("label budget " + std::to_string(l) + " exceeds sample count " +
                                      std::to_string(n));
    }
    const std::size_t global_quota = l - quota_total;
    // a = h(gamma) favours low-gamma (divergent) nodes, b = psi favours dense shallow (central) ones.
    const auto ranking = conti_xor_rank(scores.typicalness, scores.divergence, scores.w);

    SelectionResult out;
    out.budget = l;
    out.per_class_minimum = k;
    for (ClassId c = 0; c < class_count; ++c) {
        out.per_class[c];
    }
    for (NodeIndex i : ranking.order) {
        if (out.selected.size() >= l) {
            break;
        }
        const auto label = oracle(i);
        ++out.queries;
        if (!label) {
            continue;
        }
        if (*label < 0 || *label >= class_count) {
            throw data_error("oracle returned class " + std::to_string(*label) + " outside the class range");
        }
        auto& members = out.per_class[*label];
        if (members.size() < k) {
            members.push_back(i);
        } else if (out.global_extras.size() < global_quota) {
            out.global_extras.push_back(i);
        } else {
            continue;
        }
        out.selected.push_back(i);
        out.selected_labels.push_back(*label);
        out.roles.push_back(ranking.a_term[i] > ranking.b_term[i] ? Role::divergent : Role::central);
    }
    if (out.selected.size() < l) {
        for (const auto& [c, members] : out.per_class) {
            if (members.size() < k) {
                throw deficient_class_error(c, "class " + std::to_string(c) + " has only " +
                                                   std::to_string(members.size()) + " samples, below the quota " +
                                                   std::to_string(k));
            }
        }
        throw deficient_class_error(-1, "ranking exhausted before the label budget was filled");
    }
    return out;
}

SelectionResult select_labeled(const Dataset& ds, const LeadingForest& forest, const SelectionScores& scores,
                               std::size_t l, std::size_t k) {
    if (forest.size() != ds.size() || scores.typicalness.size() != ds.size()) {
        throw contract_error("select_labeled: dataset, forest and scores differ in size");
    }
    return select_labeled(dataset_oracle(ds), ds.class_count, scores, l, k);
}

double objective_value(const SelectionResult& sel, const SelectionScores& scores, double alpha) {
    double central = 0.0;
    double divergent = 0.0;
    for (std::size_t s = 0; s < sel.selected.size(); ++s) {
        const NodeIndex i = sel.selected[s];
        if (sel.roles[s] == Role::central) {
            central += scores.typicalness[i];
        } else {
            divergent += scores.divergence[i];
        }
    }
    return alpha * central + (1.0 - alpha) * divergent;
}

double xor_objective_value(const SelectionResult& sel, const SelectionScores& scores, double alpha) {
    double total = 0.0;
    for (NodeIndex i : sel.selected) {
        const double h = scores.typicalness_norm[i];
        const double psi = scores.divergence_norm[i];
        total += alpha * h * (1.0 - psi) + (1.0 - alpha) * (1.0 - h) * psi;
    }
    return total;
}

}  // namespace delala
