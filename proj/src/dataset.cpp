#include "fruler/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <limits>

#include "fruler/rng.hpp"

namespace fruler {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= s.size(); ++i) {
        if (i == s.size() || s[i] == sep) {
            out.push_back(s.substr(start, i - start));
            start = i + 1;
        }
    }
    return out;
}

double parse_number(std::string_view cell, std::size_t line_no) {
    cell = trim(cell);
    if (!cell.empty() && cell.front() == '"' && cell.back() == '"' && cell.size() >= 2)
        cell = cell.substr(1, cell.size() - 2);
    double value = 0.0;
    const auto* first = cell.data();
    const auto* last = cell.data() + cell.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last)
        throw ParseError("line " + std::to_string(line_no) + ": non-numeric cell '" +
                         std::string(cell) + "'");
    return value;
}

bool iequals_prefix(std::string_view s, std::string_view prefix) {
    if (s.size() < prefix.size()) return false;
    for (std::size_t i = 0; i < prefix.size(); ++i)
        if (std::tolower(static_cast<unsigned char>(s[i])) !=
            std::tolower(static_cast<unsigned char>(prefix[i])))
            return false;
    return true;
}

struct KeelAttribute {
    std::string name;
    bool has_range = false;
    double lo = 0.0, hi = 0.0;
};

KeelAttribute parse_attribute(std::string_view rest, std::size_t line_no) {
    // forms: "NAME real [lo, hi]", "NAME integer[lo,hi]", "NAME real"
    rest = trim(rest);
    KeelAttribute att;
    std::size_t i = 0;
    while (i < rest.size() && !std::isspace(static_cast<unsigned char>(rest[i]))) ++i;
    att.name = std::string(trim(rest.substr(0, i)));
    std::string_view tail = trim(rest.substr(i));
    if (att.name.empty())
        throw ParseError("line " + std::to_string(line_no) + ": malformed @attribute");
    if (tail.empty()) return att;
    if (!iequals_prefix(tail, "real") && !iequals_prefix(tail, "integer"))
        throw ParseError("line " + std::to_string(line_no) + ": unsupported attribute type '" +
                         std::string(tail) + "' (only real/integer)");
    const auto open = tail.find('[');
    if (open != std::string_view::npos) {
        const auto close = tail.find(']', open);
        if (close == std::string_view::npos)
            throw ParseError("line " + std::to_string(line_no) + ": unterminated range");
        const auto parts = split(tail.substr(open + 1, close - open - 1), ',');
        if (parts.size() != 2)
            throw ParseError("line " + std::to_string(line_no) + ": range needs two bounds");
        att.lo = parse_number(parts[0], line_no);
        att.hi = parse_number(parts[1], line_no);
        att.has_range = true;
    }
    return att;
}

std::vector<std::string> parse_name_list(std::string_view rest) {
    std::vector<std::string> names;
    for (auto part : split(rest, ',')) {
        auto t = trim(part);
        if (!t.empty()) names.emplace_back(t);
    }
    return names;
}

}  // namespace

Dataset::Dataset(std::string name, std::vector<VariableMeta> inputs, VariableMeta output,
                 std::vector<double> xs, std::vector<double> ys)
    : name_(std::move(name)),
      inputs_(std::move(inputs)),
      output_(std::move(output)),
      xs_(std::move(xs)),
      ys_(std::move(ys)) {
    if (ys_.empty()) throw EmptyDatasetError("dataset '" + name_ + "' has zero examples");
    // widen declared bounds so they always bracket the observed values
    const std::size_t pp = inputs_.size();
    for (std::size_t i = 0; i < ys_.size(); ++i) {
        for (std::size_t j = 0; j < pp; ++j) {
            const double v = xs_[i * pp + j];
            inputs_[j].min = std::min(inputs_[j].min, v);
            inputs_[j].max = std::max(inputs_[j].max, v);
        }
        output_.min = std::min(output_.min, ys_[i]);
        output_.max = std::max(output_.max, ys_[i]);
    }
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
    std::vector<double> xs;
    std::vector<double> ys;
    xs.reserve(indices.size() * p());
    ys.reserve(indices.size());
    for (std::size_t i : indices) {
        const auto row = x(i);
        xs.insert(xs.end(), row.begin(), row.end());
        ys.push_back(y(i));
    }
    return Dataset(name_, inputs_, output_, std::move(xs), std::move(ys));
}

Dataset load_dataset(const std::string& path, Format format) {
    return format == Format::Keel ? load_keel(path) : load_csv(path);
}

Dataset load_keel(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open '" + path + "'");

    std::string relation = path;
    std::vector<KeelAttribute> attributes;
    std::vector<std::string> input_names, output_names;
    std::vector<std::vector<double>> rows;
    bool in_data = false;

    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view sv = trim(line);
        if (sv.empty() || sv.front() == '%') continue;
        if (!in_data) {
            if (iequals_prefix(sv, "@relation")) {
                relation = std::string(trim(sv.substr(9)));
            } else if (iequals_prefix(sv, "@attribute")) {
                attributes.push_back(parse_attribute(sv.substr(10), line_no));
            } else if (iequals_prefix(sv, "@inputs")) {
                input_names = parse_name_list(sv.substr(7));
            } else if (iequals_prefix(sv, "@outputs") || iequals_prefix(sv, "@output")) {
                output_names = parse_name_list(sv.substr(sv[7] == 's' ? 8 : 7));
            } else if (iequals_prefix(sv, "@data")) {
                in_data = true;
            } else {
                throw ParseError("line " + std::to_string(line_no) + ": unknown header '" +
                                 std::string(sv) + "'");
            }
            continue;
        }
        const auto cells = split(sv, ',');
        std::vector<double> row;
        row.reserve(cells.size());
        for (auto c : cells) row.push_back(parse_number(c, line_no));
        rows.push_back(std::move(row));
    }
    if (!in_data) throw ParseError("missing @data section in '" + path + "'");
    if (attributes.empty()) throw ParseError("missing @attribute declarations in '" + path + "'");

    // default wiring: last attribute is the output when @inputs/@outputs absent
    if (output_names.empty()) output_names = {attributes.back().name};
    if (output_names.size() != 1)
        throw ParseError("expected exactly one output variable in '" + path + "'");
    if (input_names.empty()) {
        for (const auto& a : attributes)
            if (a.name != output_names[0]) input_names.push_back(a.name);
    }

    auto find_attr = [&](const std::string& name) -> const KeelAttribute& {
        for (const auto& a : attributes)
            if (a.name == name) return a;
        throw ParseError("@inputs/@outputs names undeclared attribute '" + name + "'");
    };
    auto column_of = [&](const std::string& name) -> std::size_t {
        for (std::size_t i = 0; i < attributes.size(); ++i)
            if (attributes[i].name == name) return i;
        throw ParseError("@inputs/@outputs names undeclared attribute '" + name + "'");
    };

    const std::size_t pp = input_names.size();
    std::vector<VariableMeta> inputs;
    inputs.reserve(pp);
    std::vector<std::size_t> input_cols;
    for (const auto& name : input_names) {
        const auto& a = find_attr(name);
        const double lo = a.has_range ? a.lo : std::numeric_limits<double>::infinity();
        const double hi = a.has_range ? a.hi : -std::numeric_limits<double>::infinity();
        inputs.push_back({name, lo, hi});
        input_cols.push_back(column_of(name));
    }
    const auto& out_attr = find_attr(output_names[0]);
    VariableMeta output{output_names[0],
                        out_attr.has_range ? out_attr.lo : std::numeric_limits<double>::infinity(),
                        out_attr.has_range ? out_attr.hi : -std::numeric_limits<double>::infinity()};
    const std::size_t out_col = column_of(output_names[0]);

    std::vector<double> xs;
    std::vector<double> ys;
    xs.reserve(rows.size() * pp);
    ys.reserve(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != attributes.size())
            throw ParseError("data row " + std::to_string(r + 1) + " has " +
                             std::to_string(rows[r].size()) + " cells, expected " +
                             std::to_string(attributes.size()));
        for (std::size_t c : input_cols) xs.push_back(rows[r][c]);
        ys.push_back(rows[r][out_col]);
    }
    if (rows.empty()) throw EmptyDatasetError("no data rows in '" + path + "'");
    return Dataset(relation, std::move(inputs), std::move(output), std::move(xs), std::move(ys));
}

Dataset load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open '" + path + "'");

    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line)) throw ParseError("empty file '" + path + "'");
    ++line_no;
    auto header_sv = trim(std::string_view(line));
    const auto header = split(header_sv, ',');
    if (header.size() < 2)
        throw ParseError("line 1: need at least one input column and one output column");

    const std::size_t pp = header.size() - 1;
    std::vector<VariableMeta> inputs;
    for (std::size_t j = 0; j < pp; ++j) {
        auto nm = trim(header[j]);
        inputs.push_back({std::string(nm), std::numeric_limits<double>::infinity(),
                          -std::numeric_limits<double>::infinity()});
    }
    VariableMeta output{std::string(trim(header.back())),
                        std::numeric_limits<double>::infinity(),
                        -std::numeric_limits<double>::infinity()};

    std::vector<double> xs;
    std::vector<double> ys;
    while (std::getline(in, line)) {
        ++line_no;
        auto sv = trim(std::string_view(line));
        if (sv.empty()) continue;
        const auto cells = split(sv, ',');
        if (cells.size() != header.size())
            throw ParseError("line " + std::to_string(line_no) + ": expected " +
                             std::to_string(header.size()) + " cells, got " +
                             std::to_string(cells.size()));
        for (std::size_t j = 0; j < pp; ++j) xs.push_back(parse_number(cells[j], line_no));
        ys.push_back(parse_number(cells.back(), line_no));
    }
    if (ys.empty()) throw EmptyDatasetError("no data rows in '" + path + "'");

    std::string name = path;
    if (const auto slash = name.find_last_of('/'); slash != std::string::npos)
        name = name.substr(slash + 1);
    if (const auto dot = name.find_last_of('.'); dot != std::string::npos) name = name.substr(0, dot);
    return Dataset(std::move(name), std::move(inputs), std::move(output), std::move(xs),
                   std::move(ys));
}

void write_csv(const Dataset& d, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    for (std::size_t j = 0; j < d.p(); ++j) out << d.variables()[j].name << ',';
    out << d.output().name << '\n';
    char buf[32];
    for (std::size_t i = 0; i < d.n(); ++i) {
        const auto row = d.x(i);
        for (double v : row) {
            std::snprintf(buf, sizeof buf, "%.17g", v);
            out << buf << ',';
        }
        std::snprintf(buf, sizeof buf, "%.17g", d.y(i));
        out << buf << '\n';
    }
}

FoldSplit kfold_split(const Dataset& d, std::size_t k, std::uint64_t seed) {
    if (k < 2 || k > d.n())
        throw std::invalid_argument("fold count must satisfy 2 <= k <= n (k=" +
                                    std::to_string(k) + ", n=" + std::to_string(d.n()) + ")");
    std::vector<std::size_t> order(d.n());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng = Rng::substream(seed, "folds");
    rng.shuffle(order);

    FoldSplit s;
    s.k = k;
    s.seed = seed;
    s.assignments.resize(d.n());
    for (std::size_t pos = 0; pos < order.size(); ++pos) s.assignments[order[pos]] = pos % k;
    return s;
}

std::vector<std::size_t> FoldSplit::fold_indices(std::size_t fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < assignments.size(); ++i)
        if (assignments[i] == fold) out.push_back(i);
    return out;
}

std::vector<std::size_t> FoldSplit::complement_indices(std::size_t fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < assignments.size(); ++i)
        if (assignments[i] != fold) out.push_back(i);
    return out;
}

}  // namespace fruler
