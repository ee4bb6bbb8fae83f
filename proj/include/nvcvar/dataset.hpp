#pragma once

#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace nvcvar {

/// Data-layer error (malformed CSV, schema mismatch, missing cells). Carries
/// the offending line when known; maps to exit code 2 at the CLI.
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

/// Aligned feature matrix (row-major, s x p) plus demand vector, with named
/// feature columns. eps_truth carries generator ground-truth residuals when
/// the dataset is synthetic.
struct Dataset {
    std::vector<std::string> feature_names;
    std::vector<double> features; // row-major
    std::vector<double> demand;
    std::optional<std::vector<double>> eps_truth;

    int rows() const { return static_cast<int>(demand.size()); }
    int cols() const { return static_cast<int>(feature_names.size()); }

    double z(int t, int j) const { return features[static_cast<std::size_t>(t) * cols() + j]; }
    std::span<const double> row(int t) const {
        return {features.data() + static_cast<std::size_t>(t) * cols(),
                static_cast<std::size_t>(cols())};
    }

    /// Contiguous window [begin, begin+count).
    Dataset slice(int begin, int count) const;

    /// Dataset restricted to the given feature columns (0-based), in order.
    Dataset select_features(std::span<const int> columns) const;
};

/// Flat key=value metadata written next to datasets and reports.
using Metadata = std::map<std::string, std::string>;

/// Generic layout: optional `# key=value` comment lines, then a header row
/// `t,z1,..,zp,d[,eps]`, then one row per period in time order.
Dataset read_dataset_csv(const std::string& path);

void write_dataset_csv(const std::string& path, const Dataset& ds, const Metadata& meta = {});

void write_metadata(const std::string& path, const Metadata& meta);
Metadata read_metadata(const std::string& path);

/// Food-bank weekly schema: demand is the visit count, the ten feature
/// columns follow the published roles (macro indicators, local registers,
/// holiday and seasonal dummies). Dummy columns must be 0/1 and no demand
/// cell may be missing.
extern const std::vector<std::string> kFoodBankFeatureNames;
Dataset read_foodbank_csv(const std::string& path);

/// Shortest round-trip decimal rendering; all CSV output goes through this so
/// reruns are byte-identical.
std::string format_double(double v);

} // namespace nvcvar
