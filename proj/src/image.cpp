#include "pdasgd/image.hpp"

#include "pdasgd/rng.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <limits>
#include <sstream>
#include <string>

namespace pdasgd {

Eigen::Index foreground_side(Eigen::Index side) {
  return static_cast<Eigen::Index>(std::floor(std::sqrt(0.2 * static_cast<double>(side * side))));
}

ImageInstance gen_synthetic_image(Eigen::Index side, std::uint64_t seed) {
  if (side < 2) throw std::invalid_argument("synthetic image: side must be at least 2");
  const Eigen::Index k = foreground_side(side);
  if (k < 1) {
    throw std::invalid_argument("synthetic image: side " + std::to_string(side) +
                                " is too small to hold a foreground square");
  }
  SplitMix64 rng(seed);
  ImageInstance img;
  img.source = ImageSource::synthetic;
  img.pixels.resize(side, side);
  for (Eigen::Index i = 0; i < img.pixels.size(); ++i) img.pixels.data()[i] = rng.uniform();
  const auto top = static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(side - k + 1)));
  const auto left = static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(side - k + 1)));
  for (Eigen::Index r = top; r < top + k; ++r) {
    for (Eigen::Index c = left; c < left + k; ++c) img.pixels(r, c) = rng.uniform(0.0, 10.0);
  }
  return img;
}

Distributiond image_to_distribution(const ImageInstance& img) {
  if (img.size() == 0) throw std::invalid_argument("image is empty");
  if (img.pixels.minCoeff() < 0.0) throw std::invalid_argument("image has negative intensity");
  if (!(img.pixels.sum() > 0.0)) throw std::invalid_argument("image has no positive pixel");
  const VectorXd flat = Eigen::Map<const VectorXd>(img.pixels.data(), img.size());
  return Distributiond::normalized(flat);
}

CostMatrixd grid_cost(Eigen::Index rows, Eigen::Index cols) {
  const Eigen::Index n = rows * cols;
  MatrixXd c(n, n);
  for (Eigen::Index p = 0; p < n; ++p) {
    const double pr = static_cast<double>(p / cols), pc = static_cast<double>(p % cols);
    for (Eigen::Index q = 0; q < n; ++q) {
      const double dr = pr - static_cast<double>(q / cols);
      const double dc = pc - static_cast<double>(q % cols);
      c(p, q) = dr * dr + dc * dc;
    }
  }
  const double top = c.maxCoeff();
  if (top > 0.0) c /= top;
  return CostMatrixd(std::move(c));
}

namespace {

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw parse_error("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t be32(const std::vector<std::uint8_t>& b, std::size_t at) {
  return (std::uint32_t{b[at]} << 24) | (std::uint32_t{b[at + 1]} << 16) |
         (std::uint32_t{b[at + 2]} << 8) | std::uint32_t{b[at + 3]};
}

}  // namespace

std::vector<ImageInstance> parse_idx(const std::vector<std::uint8_t>& bytes) {
  constexpr std::size_t kHeader = 16;
  if (bytes.size() < kHeader) {
    throw parse_error("idx: truncated header, missing " + std::to_string(kHeader - bytes.size()) +
                      " bytes");
  }
  const std::uint32_t magic = be32(bytes, 0);
  if (magic != 0x00000803u) {
    std::ostringstream msg;
    msg << "idx: bad magic 0x" << std::hex << magic << ", expected 0x00000803";
    throw parse_error(msg.str());
  }
  const std::uint64_t count = be32(bytes, 4), rows = be32(bytes, 8), cols = be32(bytes, 12);
  if (rows == 0 || cols == 0) throw parse_error("idx: zero image dimension");
  const std::uint64_t per_image = rows * cols;
  if (count != 0 && per_image > std::numeric_limits<std::uint64_t>::max() / count) {
    throw parse_error("idx: dimension overflow");
  }
  const std::uint64_t payload = count * per_image;
  if (payload > (std::uint64_t{1} << 34)) throw parse_error("idx: dimension overflow");
  const std::uint64_t have = bytes.size() - kHeader;
  if (have < payload) {
    throw parse_error("idx: truncated payload, missing " + std::to_string(payload - have) +
                      " bytes");
  }
  std::vector<ImageInstance> images(count);
  std::size_t at = kHeader;
  for (auto& img : images) {
    img.source = ImageSource::file;
    img.pixels.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index i = 0; i < img.pixels.size(); ++i) {
      img.pixels.data()[i] = static_cast<double>(bytes[at++]);
    }
  }
  return images;
}

std::vector<ImageInstance> load_idx(const std::filesystem::path& path) {
  return parse_idx(read_bytes(path));
}

ImageInstance load_pgm(const std::filesystem::path& path) {
  const auto bytes = read_bytes(path);
  std::size_t at = 0;
  auto skip_space = [&] {
    while (at < bytes.size()) {
      if (bytes[at] == '#') {
        while (at < bytes.size() && bytes[at] != '\n') ++at;
      } else if (std::isspace(bytes[at])) {
        ++at;
      } else {
        break;
      }
    }
  };
  auto read_uint = [&](const char* what) {
    skip_space();
    std::uint64_t v = 0;
    const std::size_t start = at;
    while (at < bytes.size() && std::isdigit(bytes[at])) {
      v = v * 10 + (bytes[at++] - '0');
      if (v > (1u << 24)) throw parse_error(std::string("pgm: ") + what + " too large");
    }
    if (at == start) throw parse_error(std::string("pgm: missing ") + what);
    return v;
  };
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5') {
    throw parse_error("pgm: expected binary P5 header");
  }
  at = 2;
  const auto width = read_uint("width");
  const auto height = read_uint("height");
  const auto maxval = read_uint("maxval");
  if (width == 0 || height == 0) throw parse_error("pgm: zero dimension");
  if (maxval == 0 || maxval > 65535) throw parse_error("pgm: maxval out of range");
  ++at;  // single whitespace before the raster
  const std::size_t depth = maxval < 256 ? 1 : 2;
  const std::uint64_t need = width * height * depth;
  if (bytes.size() < at || bytes.size() - at < need) {
    const std::uint64_t have = bytes.size() > at ? bytes.size() - at : 0;
    throw parse_error("pgm: truncated raster, missing " + std::to_string(need - have) + " bytes");
  }
  ImageInstance img;
  img.source = ImageSource::file;
  img.pixels.resize(static_cast<Eigen::Index>(height), static_cast<Eigen::Index>(width));
  for (Eigen::Index i = 0; i < img.pixels.size(); ++i) {
    std::uint32_t v = bytes[at++];
    if (depth == 2) v = (v << 8) | bytes[at++];
    img.pixels.data()[i] = static_cast<double>(v);
  }
  return img;
}

MatrixXd load_csv_matrix(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw parse_error("cannot open " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      const auto first = cell.find_first_not_of(" \t");
      const auto last = cell.find_last_not_of(" \t\r");
      double value = 0.0;
      std::from_chars_result res{};
      if (first != std::string::npos) {
        res = std::from_chars(cell.data() + first, cell.data() + last + 1, value);
      }
      const bool ok = first != std::string::npos && res.ec == std::errc() &&
                      res.ptr == cell.data() + last + 1;
      if (ok) {
        row.push_back(value);
      } else {
        throw parse_error("csv: bad number '" + cell + "' on line " + std::to_string(lineno));
      }
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw parse_error("csv: ragged row on line " + std::to_string(lineno));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw parse_error("csv: no data in " + path.string());
  MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      m(r, c) = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
    }
  }
  return m;
}

void write_csv_matrix(const std::filesystem::path& path, const MatrixXd& m) {
  std::ofstream out(path);
  if (!out) throw parse_error("cannot write " + path.string());
  char buf[32];
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", m(r, c));
      out << (c ? "," : "") << buf;
    }
    out << '\n';
  }
}

ImageInstance load_image(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".pgm") return load_pgm(path);
  if (ext == ".csv") {
    ImageInstance img;
    img.source = ImageSource::file;
    img.pixels = load_csv_matrix(path);
    return img;
  }
  auto images = load_idx(path);
  if (images.empty()) throw parse_error("idx: file holds no images");
  return std::move(images.front());
}

}  // namespace pdasgd
