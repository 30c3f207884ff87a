#include "lowshot/idx.hpp"

#include "lowshot/error.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>
#include <set>
#include <string>

namespace lowshot {
namespace {

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoFailure, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t read_be32(const std::vector<std::uint8_t>& bytes, std::size_t offset, const std::filesystem::path& path) {
  if (bytes.size() < offset + 4) throw Error(Errc::TruncatedFile, path.string() + ": header cut short");
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

void put_be32(std::ofstream& out, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v >> 24), static_cast<char>(v >> 16), static_cast<char>(v >> 8), static_cast<char>(v)};
  out.write(b, 4);
}

}  // namespace

LabeledDataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels, SplitTag split) {
  const auto img = read_file(images);
  const auto lab = read_file(labels);

  const std::uint32_t img_magic = read_be32(img, 0, images);
  if (img_magic != kIdxImagesMagic) throw Error(Errc::BadMagic, images.string() + ": not an IDX u8 image file");
  const std::uint32_t lab_magic = read_be32(lab, 0, labels);
  if (lab_magic != kIdxLabelsMagic) throw Error(Errc::BadMagic, labels.string() + ": not an IDX u8 label file");

  const std::uint32_t count = read_be32(img, 4, images);
  const std::uint32_t rows = read_be32(img, 8, images);
  const std::uint32_t cols = read_be32(img, 12, images);
  const std::uint32_t label_count = read_be32(lab, 4, labels);
  if (count != label_count) {
    throw Error(Errc::CountMismatch, std::to_string(count) + " images but " + std::to_string(label_count) + " labels");
  }
  const std::size_t pixels = std::size_t{rows} * cols;
  if (img.size() < 16 + std::size_t{count} * pixels) throw Error(Errc::TruncatedFile, images.string() + ": payload cut short");
  if (lab.size() < 8 + std::size_t{count}) throw Error(Errc::TruncatedFile, labels.string() + ": payload cut short");

  LabeledDataset d;
  d.split = split;
  d.image_shape = ImageShape{rows, cols};
  d.inputs.resize(static_cast<Eigen::Index>(pixels), static_cast<Eigen::Index>(count));
  std::set<ClassId> catalog;
  for (std::size_t i = 0; i < count; ++i) {
    const std::uint8_t* src = img.data() + 16 + i * pixels;
    for (std::size_t p = 0; p < pixels; ++p) d.inputs(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(i)) = scale_intensity(src[p]);
    const auto label = static_cast<ClassId>(lab[8 + i]);
    d.labels.push_back(label);
    catalog.insert(label);
  }
  d.catalog.assign(catalog.begin(), catalog.end());
  return d;
}

void write_idx_images(const std::filesystem::path& path, std::span<const std::uint8_t> pixels, std::uint32_t count,
                      std::uint32_t rows, std::uint32_t cols) {
  if (pixels.size() != std::size_t{count} * rows * cols) throw Error(Errc::InvalidShape, "pixel buffer size mismatch");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::IoFailure, "cannot write " + path.string());
  put_be32(out, kIdxImagesMagic);
  put_be32(out, count);
  put_be32(out, rows);
  put_be32(out, cols);
  out.write(reinterpret_cast<const char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
  if (!out) throw Error(Errc::IoFailure, "write failed for " + path.string());
}

void write_idx_labels(const std::filesystem::path& path, std::span<const std::uint8_t> labels) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::IoFailure, "cannot write " + path.string());
  put_be32(out, kIdxLabelsMagic);
  put_be32(out, static_cast<std::uint32_t>(labels.size()));
  out.write(reinterpret_cast<const char*>(labels.data()), static_cast<std::streamsize>(labels.size()));
  if (!out) throw Error(Errc::IoFailure, "write failed for " + path.string());
}

}  // namespace lowshot
