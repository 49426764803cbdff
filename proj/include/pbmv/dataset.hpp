#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "pbmv/matrix.hpp"

namespace pbmv {

// V feature matrices describing the same n examples, plus labels in {-1,+1}.
// Immutable after loading; safe to share across threads.
struct MultiviewDataset {
  std::vector<Matrix> views;
  std::vector<int> labels;
  std::vector<std::string> view_names;

  std::size_t n() const { return labels.size(); }
  std::size_t num_views() const { return views.size(); }

  // Throws InputError unless: V >= 1, n >= 1, every view has n rows and at
  // least one column, every label is exactly -1 or +1.
  void validate() const;
};

// Subset of the rows of a dataset, in the given order.
MultiviewDataset take_rows(const MultiviewDataset& ds, const std::vector<std::size_t>& rows);

// Manifest JSON: {"views": ["v0.csv", ...], "labels": "labels.csv",
// "names": ["view0", ...]}; paths are relative to the manifest file.
// View CSVs hold one example per line, comma-separated decimal floats, no
// header. The labels file holds one of "-1", "+1" or "1" per line.
MultiviewDataset load_manifest(const std::filesystem::path& manifest_path);

// Writes manifest.json, one CSV per view and labels.csv into dir (created if
// missing). Floats are written in shortest round-trip decimal form, so
// load_manifest(write_manifest(ds)) reproduces ds bit for bit.
// Returns the manifest path.
std::filesystem::path write_manifest(const MultiviewDataset& ds, const std::filesystem::path& dir);

// Synthetic multiview sample. Labels are drawn uniformly from {-1,+1}. Each
// view is 2-dimensional: column 0 carries the label sign with flip
// probability noise_per_view[v] (so the best depth-1 stump on the view has
// Bayes error noise_per_view[v]); column 1 carries an attenuated secondary
// sign with flip probability min(noise_per_view[v] + 0.01, 0.499), flipped
// independently of column 0. Magnitudes are uniform in [0.2, 1), keeping both
// columns separated from zero. Deterministic given the seed.
MultiviewDataset synth_multiview(std::size_t n, std::size_t num_views,
                                 const std::vector<double>& noise_per_view,
                                 std::uint64_t seed);

// n single-channel images, row-major pixels.
struct ImageTensor {
  std::size_t count = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::uint8_t> pixels;

  std::uint8_t at(std::size_t image, std::size_t r, std::size_t c) const {
    return pixels[(image * rows + r) * cols + c];
  }
};

enum class SplitMode {
  quarters,        // four disjoint 14x14 quadrants
  center_overlap,  // four 14x14 windows with top-left corners (4,4), (4,10),
                   // (10,4), (10,10); all contain the central 8x8 block
};

SplitMode parse_split_mode(const std::string& name);  // "quarters" | "center-overlap"

// Splits 28x28 images into 4 views of 196 features each, pixel values scaled
// to [0,1]. Feature order within a view is row-major over the window.
std::pair<std::vector<Matrix>, std::vector<std::string>> split_image_features(
    const ImageTensor& images, SplitMode mode);

// Same split plus one-vs-all labels: +1 iff the raw class equals positive_class.
MultiviewDataset split_image_views(const ImageTensor& images,
                                   const std::vector<int>& labels_raw,
                                   int positive_class, SplitMode mode);

struct IdxData {
  ImageTensor images;
  std::vector<int> labels;
};

// Reads an IDX image/label file pair (magic 0x00000803 / 0x00000801,
// big-endian dimensions). Throws InputError on bad magic, truncation, or an
// image/label count mismatch.
IdxData load_idx(const std::filesystem::path& images_path,
                 const std::filesystem::path& labels_path);

}  // namespace pbmv
