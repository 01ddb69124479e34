#include "delala/dataset.hpp"

#include "delala/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <string_view>

namespace delala {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    return s;
}

std::vector<std::string_view> split_cells(std::string_view line) {
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            cells.push_back(trim(line.substr(start)));
            break;
        }
        cells.push_back(trim(line.substr(start, comma - start)));
        start = comma + 1;
    }
    return cells;
}

std::optional<double> parse_double(std::string_view cell) {
    if (!cell.empty() && cell.front() == '+') {
        cell.remove_prefix(1);
    }
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
    if (ec != std::errc{} || ptr != cell.data() + cell.size() || !std::isfinite(value)) {
        return std::nullopt;
    }
    return value;
}

std::string format_double(double value) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, ptr);
}

}  // namespace

Dataset Dataset::subset(std::span<const std::size_t> indices, bool keep_labels) const {
    Dataset out;
    out.features.resize(static_cast<Eigen::Index>(indices.size()), features.cols());
    out.labels.resize(indices.size());
    for (std::size_t r = 0; r < indices.size(); ++r) {
        out.features.row(static_cast<Eigen::Index>(r)) = features.row(static_cast<Eigen::Index>(indices[r]));
        if (keep_labels) {
            out.labels[r] = labels[indices[r]];
        }
    }
    out.class_count = class_count;
    out.class_names = class_names;
    out.feature_names = feature_names;
    out.name = name;
    return out;
}

Dataset Dataset::without_labels() const {
    Dataset out = *this;
    std::fill(out.labels.begin(), out.labels.end(), std::nullopt);
    return out;
}

Dataset parse_csv(std::string_view text, const CsvSchema& schema, std::string name) {
    std::vector<std::vector<double>> rows;
    std::vector<std::optional<ClassId>> labels;
    std::map<std::string, ClassId, std::less<>> class_ids;
    std::vector<std::string> class_names;
    std::vector<std::string> header;
    std::size_t arity = 0;
    std::size_t label_pos = 0;
    bool has_label = false;
    bool header_pending = schema.has_header;

    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto end = text.find('\n', pos);
        if (end == std::string_view::npos) {
            end = text.size();
        }
        const auto line = trim(text.substr(pos, end - pos));
        pos = end + 1;
        ++line_no;
        if (line.empty()) {
            continue;
        }
        const auto cells = split_cells(line);
        if (arity == 0) {
            arity = cells.size();
            if (schema.label_column) {
                const int col = *schema.label_column;
                const int resolved = col < 0 ? static_cast<int>(arity) + col : col;
                if (resolved < 0 || resolved >= static_cast<int>(arity)) {
                    throw parse_error(line_no, "label column " + std::to_string(col) + " out of range for " +
                                                   std::to_string(arity) + " columns");
                }
                label_pos = static_cast<std::size_t>(resolved);
                has_label = true;
            }
            if (arity - (has_label ? 1 : 0) == 0) {
                throw parse_error(line_no, "no feature columns");
            }
        } else if (cells.size() != arity) {
            throw parse_error(line_no, "expected " + std::to_string(arity) + " cells, found " +
                                           std::to_string(cells.size()));
        }
        if (header_pending) {
            header_pending = false;
            for (std::size_t c = 0; c < cells.size(); ++c) {
                if (!has_label || c != label_pos) {
                    header.emplace_back(cells[c]);
                }
            }
            continue;
        }
        std::vector<double> row;
        row.reserve(arity);
        std::optional<ClassId> label;
        for (std::size_t c = 0; c < cells.size(); ++c) {
            if (has_label && c == label_pos) {
                if (!cells[c].empty()) {
                    auto it = class_ids.find(cells[c]);
                    if (it == class_ids.end()) {
                        it = class_ids.emplace(std::string(cells[c]), static_cast<ClassId>(class_names.size())).first;
                        class_names.emplace_back(cells[c]);
                    }
                    label = it->second;
                }
                continue;
            }
            const auto value = parse_double(cells[c]);
            if (!value) {
                throw parse_error(line_no, "non-numeric feature '" + std::string(cells[c]) + "' in column " +
                                               std::to_string(c + 1));
            }
            row.push_back(*value);
        }
        rows.push_back(std::move(row));
        labels.push_back(label);
    }

    if (rows.empty()) {
        throw empty_input_error("no data rows" + (name.empty() ? std::string{} : " in " + name));
    }

    Dataset ds;
    const auto n = static_cast<Eigen::Index>(rows.size());
    const auto d = static_cast<Eigen::Index>(rows.front().size());
    ds.features.resize(n, d);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < d; ++j) {
            ds.features(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        }
    }
    ds.labels = std::move(labels);
    ds.class_count = static_cast<int>(class_names.size());
    ds.class_names = std::move(class_names);
    if (header.empty()) {
        for (Eigen::Index j = 0; j < d; ++j) {
            header.push_back("f" + std::to_string(j));
        }
    }
    ds.feature_names = std::move(header);
    ds.name = std::move(name);
    return ds;
}

Dataset load_csv(const std::filesystem::path& path, const CsvSchema& schema) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw data_error("cannot open " + path.string());
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    const std::string text = buf.str();
    if (trim(text).empty() || text.find_first_not_of(" \t\r\n") == std::string::npos) {
        throw empty_input_error("empty file " + path.string());
    }
    return parse_csv(text, schema, path.stem().string());
}

std::string format_csv(const Dataset& ds) {
    std::string out;
    const bool with_labels = ds.class_count > 0;
    for (std::size_t j = 0; j < ds.dims(); ++j) {
        if (j > 0) {
            out += ',';
        }
        out += j < ds.feature_names.size() ? ds.feature_names[j] : "f" + std::to_string(j);
    }
    if (with_labels) {
        out += ",class";
    }
    out += '\n';
    for (std::size_t i = 0; i < ds.size(); ++i) {
        for (std::size_t j = 0; j < ds.dims(); ++j) {
            if (j > 0) {
                out += ',';
            }
            out += format_double(ds.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
        }
        if (with_labels) {
            out += ',';
            if (ds.labels[i]) {
                out += ds.class_names[static_cast<std::size_t>(*ds.labels[i])];
            }
        }
        out += '\n';
    }
    return out;
}

void save_csv(const Dataset& ds, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw data_error("cannot write " + path.string());
    }
    out << format_csv(ds);
}

Matrix zscore_columns(const Matrix& values) {
    Matrix out(values.rows(), values.cols());
    const auto n = static_cast<double>(values.rows());
    for (Eigen::Index j = 0; j < values.cols(); ++j) {
        const auto col = values.col(j);
        const bool constant = (col.array() == col(0)).all();
        if (constant) {
            out.col(j).setZero();
            continue;
        }
        const double mean = col.mean();
        const double var = (col.array() - mean).square().sum() / n;
        out.col(j) = (col.array() - mean) / std::sqrt(var);
    }
    return out;
}

Dataset zscore_normalize(const Dataset& ds) {
    Dataset out = ds;
    out.features = zscore_columns(ds.features);
    return out;
}

DistanceMatrix pairwise_distances(const Matrix& rows) {
    // Column-major copy so that each sample is contiguous.
    const Matrix samples = rows.transpose();
    const Eigen::Index n = samples.cols();
    DistanceMatrix dist{Matrix::Zero(n, n)};
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index i = j + 1; i < n; ++i) {
            const double d = (samples.col(i) - samples.col(j)).norm();
            dist.values(i, j) = d;
            dist.values(j, i) = d;
        }
    }
    return dist;
}

DistanceMatrix pairwise_distances(const Dataset& ds) {
    return pairwise_distances(ds.features);
}

Matrix distance_block(const DistanceMatrix& dist,
                      std::span<const std::size_t> row_idx,
                      std::span<const std::size_t> col_idx) {
    Matrix block(static_cast<Eigen::Index>(row_idx.size()), static_cast<Eigen::Index>(col_idx.size()));
    for (std::size_t c = 0; c < col_idx.size(); ++c) {
        for (std::size_t r = 0; r < row_idx.size(); ++r) {
            block(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = dist(row_idx[r], col_idx[c]);
        }
    }
    return block;
}

DistanceMatrix restrict_distances(const DistanceMatrix& dist, std::span<const std::size_t> idx) {
    return DistanceMatrix{distance_block(dist, idx, idx)};
}

Matrix cross_distances(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.cols()) {
        throw contract_error("cross_distances: feature dimension mismatch");
    }
    const Matrix at = a.transpose();
    const Matrix bt = b.transpose();
    Matrix out(a.rows(), b.rows());
    for (Eigen::Index j = 0; j < b.rows(); ++j) {
        for (Eigen::Index i = 0; i < a.rows(); ++i) {
            out(i, j) = (at.col(i) - bt.col(j)).norm();
        }
    }
    return out;
}

KernelMatrix gaussian_kernel(const Matrix& dist, double bandwidth) {
    if (!(bandwidth > 0.0) || !std::isfinite(bandwidth)) {
        throw config_error("kernel bandwidth must be positive and finite");
    }
    const double inv = 1.0 / (bandwidth * bandwidth);
    return KernelMatrix{(-dist.array().square() * inv).exp().matrix(), bandwidth};
}

KernelMatrix gaussian_kernel(const DistanceMatrix& dist, double bandwidth) {
    return gaussian_kernel(dist.values, bandwidth);
}

double distance_percentile(const DistanceMatrix& dist, double q) {
    if (!(q > 0.0 && q <= 1.0)) {
        throw config_error("percentile must lie in (0, 1]");
    }
    const std::size_t n = dist.size();
    if (n < 2) {
        return 1.0;
    }
    std::vector<double> entries;
    entries.reserve(n * (n - 1) / 2);
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t i = j + 1; i < n; ++i) {
            entries.push_back(dist(i, j));
        }
    }
    const auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(entries.size())));
    const std::size_t k = rank == 0 ? 0 : rank - 1;
    std::nth_element(entries.begin(), entries.begin() + static_cast<std::ptrdiff_t>(k), entries.end());
    double value = entries[k];
    if (value > 0.0) {
        return value;
    }
    value = 0.0;
    for (double e : entries) {
        if (e > 0.0 && (value == 0.0 || e < value)) {
            value = e;
        }
    }
    return value > 0.0 ? value : 1.0;
}

}  // namespace delala
