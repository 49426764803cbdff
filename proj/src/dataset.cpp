#include "pbmv/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "pbmv/rng.hpp"

namespace pbmv {

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open file: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return std::move(buf).str();
}

// shortest decimal form that parses back to the same double
void append_double(std::string& out, double x) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), x);
  out.append(buf, res.ptr);
}

double parse_double(std::string_view token, const std::filesystem::path& file,
                    std::size_t line_no) {
  double x = 0.0;
  const char* first = token.data();
  const char* last = token.data() + token.size();
  auto res = std::from_chars(first, last, x);
  if (res.ec != std::errc() || res.ptr != last)
    throw InputError("non-numeric cell '" + std::string(token) + "' in " + file.string() +
                     " line " + std::to_string(line_no));
  return x;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  return s;
}

Matrix load_view_csv(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  std::vector<double> values;
  std::size_t cols = 0;
  std::size_t rows = 0;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string::npos) eol = text.size();
    std::string_view line = trim(std::string_view(text).substr(pos, eol - pos));
    pos = eol + 1;
    ++line_no;
    if (line.empty()) continue;
    std::size_t row_cols = 0;
    std::size_t start = 0;
    for (;;) {
      std::size_t comma = line.find(',', start);
      std::string_view token = trim(line.substr(start, comma == std::string_view::npos
                                                            ? std::string_view::npos
                                                            : comma - start));
      values.push_back(parse_double(token, path, line_no));
      ++row_cols;
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (cols == 0) cols = row_cols;
    if (row_cols != cols)
      throw InputError("ragged row in " + path.string() + " line " + std::to_string(line_no));
    ++rows;
  }
  if (rows == 0) throw InputError("empty view file: " + path.string());
  return Matrix(rows, cols, std::move(values));
}

std::vector<int> load_labels_csv(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  std::vector<int> labels;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string::npos) eol = text.size();
    std::string_view line = trim(std::string_view(text).substr(pos, eol - pos));
    pos = eol + 1;
    ++line_no;
    if (line.empty()) continue;
    if (line == "-1") {
      labels.push_back(-1);
    } else if (line == "+1" || line == "1") {
      labels.push_back(+1);
    } else {
      throw InputError("label '" + std::string(line) + "' not in {-1,+1} in " + path.string() +
                       " line " + std::to_string(line_no));
    }
  }
  return labels;
}

}  // namespace

void MultiviewDataset::validate() const {
  if (views.empty()) throw InputError("dataset: no views");
  if (labels.empty()) throw InputError("dataset: no examples");
  if (view_names.size() != views.size())
    throw InputError("dataset: view name count does not match view count");
  for (std::size_t v = 0; v < views.size(); ++v) {
    if (views[v].rows() != labels.size())
      throw InputError("dataset: view " + std::to_string(v) + " has " +
                       std::to_string(views[v].rows()) + " rows, expected " +
                       std::to_string(labels.size()));
    if (views[v].cols() == 0) throw InputError("dataset: view " + std::to_string(v) + " has no features");
  }
  for (int y : labels)
    if (y != -1 && y != 1) throw InputError("dataset: label not in {-1,+1}");
}

MultiviewDataset take_rows(const MultiviewDataset& ds, const std::vector<std::size_t>& rows) {
  MultiviewDataset out;
  out.view_names = ds.view_names;
  out.labels.reserve(rows.size());
  for (std::size_t i : rows) out.labels.push_back(ds.labels[i]);
  for (const Matrix& view : ds.views) {
    Matrix m(rows.size(), view.cols());
    for (std::size_t k = 0; k < rows.size(); ++k) {
      auto src = view.row(rows[k]);
      std::copy(src.begin(), src.end(), &m(k, 0));
    }
    out.views.push_back(std::move(m));
  }
  return out;
}

MultiviewDataset load_manifest(const std::filesystem::path& manifest_path) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(read_file(manifest_path));
  } catch (const nlohmann::json::exception& e) {
    throw InputError("bad manifest " + manifest_path.string() + ": " + e.what());
  }
  if (!doc.is_object() || !doc.contains("views") || !doc.contains("labels"))
    throw InputError("manifest must contain \"views\" and \"labels\": " + manifest_path.string());

  const auto base = manifest_path.parent_path();
  MultiviewDataset ds;
  for (const auto& entry : doc.at("views")) {
    if (!entry.is_string()) throw InputError("manifest \"views\" entries must be paths");
    ds.views.push_back(load_view_csv(base / entry.get<std::string>()));
  }
  ds.labels = load_labels_csv(base / doc.at("labels").get<std::string>());

  if (doc.contains("names")) {
    for (const auto& name : doc.at("names")) ds.view_names.push_back(name.get<std::string>());
    if (ds.view_names.size() != ds.views.size())
      throw InputError("manifest \"names\" count does not match \"views\"");
  } else {
    for (std::size_t v = 0; v < ds.views.size(); ++v)
      ds.view_names.push_back("view" + std::to_string(v));
  }

  if (ds.views.empty()) throw InputError("manifest lists no views: " + manifest_path.string());
  for (std::size_t v = 0; v < ds.views.size(); ++v)
    if (ds.views[v].rows() != ds.views[0].rows())
      throw InputError("row-count mismatch across views: view 0 has " +
                       std::to_string(ds.views[0].rows()) + " rows, view " + std::to_string(v) +
                       " has " + std::to_string(ds.views[v].rows()));
  if (ds.labels.size() != ds.views[0].rows())
    throw InputError("label count " + std::to_string(ds.labels.size()) +
                     " does not match view rows " + std::to_string(ds.views[0].rows()));
  ds.validate();
  return ds;
}

std::filesystem::path write_manifest(const MultiviewDataset& ds, const std::filesystem::path& dir) {
  ds.validate();
  std::filesystem::create_directories(dir);

  nlohmann::json manifest;
  manifest["names"] = ds.view_names;
  std::vector<std::string> view_files;
  for (std::size_t v = 0; v < ds.num_views(); ++v) {
    std::string file = "view" + std::to_string(v) + ".csv";
    view_files.push_back(file);
    std::string text;
    const Matrix& m = ds.views[v];
    for (std::size_t i = 0; i < m.rows(); ++i) {
      for (std::size_t j = 0; j < m.cols(); ++j) {
        if (j) text.push_back(',');
        append_double(text, m(i, j));
      }
      text.push_back('\n');
    }
    std::ofstream out(dir / file, std::ios::binary);
    out << text;
    if (!out) throw InputError("cannot write " + (dir / file).string());
  }
  manifest["views"] = view_files;
  manifest["labels"] = "labels.csv";
  {
    std::ofstream out(dir / "labels.csv", std::ios::binary);
    for (int y : ds.labels) out << (y > 0 ? "+1" : "-1") << '\n';
    if (!out) throw InputError("cannot write " + (dir / "labels.csv").string());
  }
  const auto manifest_path = dir / "manifest.json";
  std::ofstream out(manifest_path, std::ios::binary);
  out << manifest.dump(2) << '\n';
  if (!out) throw InputError("cannot write " + manifest_path.string());
  return manifest_path;
}

MultiviewDataset synth_multiview(std::size_t n, std::size_t num_views,
                                 const std::vector<double>& noise_per_view,
                                 std::uint64_t seed) {
  if (n == 0) throw InputError("synth: n must be >= 1");
  if (num_views == 0) throw InputError("synth: need at least one view");
  if (noise_per_view.size() != num_views)
    throw InputError("synth: expected " + std::to_string(num_views) + " noise values, got " +
                     std::to_string(noise_per_view.size()));
  for (double p : noise_per_view)
    if (!(p >= 0.0 && p < 0.5))
      throw InputError("synth: noise must lie in [0, 0.5)");

  std::vector<double> secondary(num_views);
  for (std::size_t v = 0; v < num_views; ++v)
    secondary[v] = std::min(noise_per_view[v] + 0.01, 0.499);

  MultiviewDataset ds;
  ds.labels.resize(n);
  for (std::size_t v = 0; v < num_views; ++v) {
    ds.views.emplace_back(n, 2);
    ds.view_names.push_back("view" + std::to_string(v));
  }

  Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    const int y = rng.sign();
    ds.labels[i] = y;
    for (std::size_t v = 0; v < num_views; ++v) {
      const int s0 = rng.bernoulli(noise_per_view[v]) ? -y : y;
      const double m0 = rng.uniform(0.2, 1.0);
      const int s1 = rng.bernoulli(secondary[v]) ? -y : y;
      const double m1 = rng.uniform(0.2, 1.0);
      ds.views[v](i, 0) = s0 * m0;
      ds.views[v](i, 1) = s1 * m1;
    }
  }
  return ds;
}

SplitMode parse_split_mode(const std::string& name) {
  if (name == "quarters") return SplitMode::quarters;
  if (name == "center-overlap" || name == "center_overlap") return SplitMode::center_overlap;
  throw InputError("unknown split mode '" + name + "' (expected quarters or center-overlap)");
}

std::pair<std::vector<Matrix>, std::vector<std::string>> split_image_features(
    const ImageTensor& images, SplitMode mode) {
  if (images.count == 0) throw InputError("image split: no images");
  if (images.rows != 28 || images.cols != 28)
    throw InputError("image split: expected 28x28 images, got " + std::to_string(images.rows) +
                     "x" + std::to_string(images.cols));

  struct Window { std::size_t r0, c0; };
  std::vector<Window> windows;
  std::vector<std::string> names;
  constexpr std::size_t kWin = 14;
  if (mode == SplitMode::quarters) {
    windows = {{0, 0}, {0, 14}, {14, 0}, {14, 14}};
    names = {"top_left", "top_right", "bottom_left", "bottom_right"};
  } else {
    windows = {{4, 4}, {4, 10}, {10, 4}, {10, 10}};
    names = {"center_tl", "center_tr", "center_bl", "center_br"};
  }

  std::vector<Matrix> views;
  for (const Window& w : windows) {
    Matrix m(images.count, kWin * kWin);
    for (std::size_t i = 0; i < images.count; ++i) {
      std::size_t j = 0;
      for (std::size_t r = 0; r < kWin; ++r)
        for (std::size_t c = 0; c < kWin; ++c)
          m(i, j++) = images.at(i, w.r0 + r, w.c0 + c) / 255.0;
    }
    views.push_back(std::move(m));
  }
  return {std::move(views), std::move(names)};
}

MultiviewDataset split_image_views(const ImageTensor& images, const std::vector<int>& labels_raw,
                                   int positive_class, SplitMode mode) {
  if (labels_raw.size() != images.count)
    throw InputError("image split: " + std::to_string(images.count) + " images but " +
                     std::to_string(labels_raw.size()) + " labels");
  MultiviewDataset ds;
  auto [views, names] = split_image_features(images, mode);
  ds.views = std::move(views);
  ds.view_names = std::move(names);
  ds.labels.reserve(labels_raw.size());
  for (int c : labels_raw) ds.labels.push_back(c == positive_class ? +1 : -1);
  ds.validate();
  return ds;
}

namespace {

std::uint32_t read_be32(const std::string& bytes, std::size_t offset,
                        const std::filesystem::path& file) {
  if (offset + 4 > bytes.size()) throw InputError("truncated IDX file: " + file.string());
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data()) + offset;
  return (std::uint32_t(p[0]) << 24) | (std::uint32_t(p[1]) << 16) | (std::uint32_t(p[2]) << 8) |
         std::uint32_t(p[3]);
}

}  // namespace

IdxData load_idx(const std::filesystem::path& images_path,
                 const std::filesystem::path& labels_path) {
  const std::string image_bytes = read_file(images_path);
  if (read_be32(image_bytes, 0, images_path) != 0x00000803u)
    throw InputError("bad IDX image magic in " + images_path.string());
  const std::size_t count = read_be32(image_bytes, 4, images_path);
  const std::size_t rows = read_be32(image_bytes, 8, images_path);
  const std::size_t cols = read_be32(image_bytes, 12, images_path);
  const std::size_t expected = 16 + count * rows * cols;
  if (image_bytes.size() != expected)
    throw InputError("IDX image payload size mismatch in " + images_path.string() + ": expected " +
                     std::to_string(expected) + " bytes, got " +
                     std::to_string(image_bytes.size()));

  const std::string label_bytes = read_file(labels_path);
  if (read_be32(label_bytes, 0, labels_path) != 0x00000801u)
    throw InputError("bad IDX label magic in " + labels_path.string());
  const std::size_t label_count = read_be32(label_bytes, 4, labels_path);
  if (label_bytes.size() != 8 + label_count)
    throw InputError("IDX label payload size mismatch in " + labels_path.string());
  if (label_count != count)
    throw InputError("IDX count mismatch: " + std::to_string(count) + " images vs " +
                     std::to_string(label_count) + " labels");

  IdxData out;
  out.images.count = count;
  out.images.rows = rows;
  out.images.cols = cols;
  out.images.pixels.assign(image_bytes.begin() + 16, image_bytes.end());
  out.labels.reserve(label_count);
  for (std::size_t i = 0; i < label_count; ++i)
    out.labels.push_back(static_cast<unsigned char>(label_bytes[8 + i]));
  return out;
}

}  // namespace pbmv
