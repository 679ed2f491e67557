#pragma once

#include "pdasgd/types.hpp"

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <vector>

namespace pdasgd {

enum class ImageSource { synthetic, file };

/// Grayscale image, rows x cols, nonnegative intensities.
struct ImageInstance {
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> pixels;
  ImageSource source = ImageSource::synthetic;

  Eigen::Index rows() const { return pixels.rows(); }
  Eigen::Index cols() const { return pixels.cols(); }
  Eigen::Index size() const { return pixels.size(); }
};

struct parse_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Side of the foreground square: floor(sqrt(0.2 side^2)).
Eigen::Index foreground_side(Eigen::Index side);

/// side x side image with background ~ U[0,1] and one uniformly placed
/// foreground square (~20% of the area) with intensities ~ U[0,10].
ImageInstance gen_synthetic_image(Eigen::Index side, std::uint64_t seed);

/// Flattened (row-major) pixel mass normalized to a distribution.
Distributiond image_to_distribution(const ImageInstance& img);

/// Squared Euclidean distance between pixel grid coordinates, divided by its
/// maximum so that ||C||_inf = 1.
CostMatrixd grid_cost(Eigen::Index rows, Eigen::Index cols);

/// IDX3-ubyte: magic 0x00000803, big-endian u32 count/rows/cols, then
/// row-major unsigned bytes.
std::vector<ImageInstance> load_idx(const std::filesystem::path& path);
std::vector<ImageInstance> parse_idx(const std::vector<std::uint8_t>& bytes);

/// Binary PGM (P5), maxval up to 65535.
ImageInstance load_pgm(const std::filesystem::path& path);

/// Comma-separated numeric matrix, one row per line.
MatrixXd load_csv_matrix(const std::filesystem::path& path);
void write_csv_matrix(const std::filesystem::path& path, const MatrixXd& m);

/// Dispatches on extension: .pgm, .csv; IDX files yield their first image.
ImageInstance load_image(const std::filesystem::path& path);

}  // namespace pdasgd
