#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace fruler {

class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class EmptyDatasetError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct VariableMeta {
    std::string name;
    double min = 0.0;
    double max = 0.0;
};

enum class Format { Keel, Csv };

// Regression dataset: p real inputs, one real output. Immutable after
// loading; safe to share across threads.
class Dataset {
public:
    Dataset() = default;
    Dataset(std::string name, std::vector<VariableMeta> inputs, VariableMeta output,
            std::vector<double> xs, std::vector<double> ys);

    const std::string& name() const { return name_; }
    std::size_t n() const { return ys_.size(); }
    std::size_t p() const { return inputs_.size(); }
    const std::vector<VariableMeta>& variables() const { return inputs_; }
    const VariableMeta& output() const { return output_; }

    std::span<const double> x(std::size_t i) const {
        return {xs_.data() + i * p(), p()};
    }
    double y(std::size_t i) const { return ys_[i]; }
    const std::vector<double>& ys() const { return ys_; }

    // Row subset copy, preserving variable metadata (domain bounds stay
    // those of the parent set).
    Dataset subset(std::span<const std::size_t> indices) const;

private:
    std::string name_;
    std::vector<VariableMeta> inputs_;
    VariableMeta output_;
    std::vector<double> xs_;  // row-major, n * p
    std::vector<double> ys_;
};

Dataset load_dataset(const std::string& path, Format format);
Dataset load_keel(const std::string& path);
Dataset load_csv(const std::string& path);
void write_csv(const Dataset& d, const std::string& path);

struct FoldSplit {
    std::size_t k = 0;
    std::vector<std::size_t> assignments;  // fold index per example
    std::uint64_t seed = 0;

    std::vector<std::size_t> fold_indices(std::size_t fold) const;
    std::vector<std::size_t> complement_indices(std::size_t fold) const;
};

FoldSplit kfold_split(const Dataset& d, std::size_t k, std::uint64_t seed);

}  // namespace fruler
