#pragma once
#include <filesystem>
#include <optional>
#include <string>
#include <hip/data.hpp>
#include <hip/prediction.hpp>
#include <hip/selection.hpp>

namespace hip::io {

namespace fs = std::filesystem;

/// Shortest decimal text that parses back to the same double.
std::string format_double(double value);

struct CsvTable
{
    std::vector<std::string> header;
    Matrix values;
};

/// First row holds column names; every later row is one sample.
CsvTable read_csv(const fs::path& path);
void write_csv(const fs::path& path, const std::vector<std::string>& header, const Matrix& values);

/// A dataset described by a manifest file plus where its ground truth lives.
struct Bundle
{
    MultiViewDataset data;
    std::optional<fs::path> truth;
};

/// Manifest layout:
///   { "views": [...], "subgroups": [...], "gamma": [...],
///     "outcome": {"type": "continuous" | "multiclass"},
///     "x": [{"view": v, "subgroup": s, "path": "file.csv"}, ...],
///     "y": [{"subgroup": s, "path": "file.csv"}, ...],          (optional)
///     "truth": "truth.csv" }                                     (optional)
/// Relative paths resolve against the manifest's directory. Multiclass
/// outcome files hold one 0/1 column per class.
Bundle load_manifest(const fs::path& manifest);

/// Writes one CSV per block plus manifest.json into `dir`; returns the
/// manifest path. `truth_file` is recorded in the manifest when given.
fs::path write_bundle(const fs::path& dir, const MultiViewDataset& data,
                      const std::optional<std::string>& truth_file = std::nullopt);

/// Ground-truth signal sets as rows of (view, subgroup, variable index).
void write_truth(const fs::path& path, const MultiViewDataset& data,
                 const std::vector<std::vector<std::vector<int>>>& signal);
std::vector<std::vector<std::vector<int>>> read_truth(const fs::path& path, const MultiViewDataset& data);

void save_model(const fs::path& path, const FactorModel& model);
FactorModel load_model(const fs::path& path);
std::string model_to_json(const FactorModel& model);
FactorModel model_from_json(const std::string& text);

void write_selection(const fs::path& path, const SelectionReport& report);
void write_loss_trace(const fs::path& path, const LossTrace& trace);
void write_bic_table(const fs::path& path, const std::vector<BicRecord>& records);
void write_predictions(const fs::path& path, const FactorModel& model, const MultiViewDataset& test,
                       const PredictionResult& prediction);
void write_scree(const fs::path& path, const Vector& values);

} // namespace hip::io
