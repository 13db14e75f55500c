#include "biphoton/grid_io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace biphoton {

static_assert(std::endian::native == std::endian::little,
              "grid file I/O assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'B', 'P', 'H', 'G', 'R', 'I', 'D', '1'};

template <class T>
void put(std::ostream& os, T value) {
  os.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <class T>
T get(std::istream& is, const std::filesystem::path& path) {
  T value{};
  if (!is.read(reinterpret_cast<char*>(&value), sizeof(T))) {
    throw IoError("truncated header in " + path.string());
  }
  return value;
}

std::size_t dtype_size(Dtype d) {
  switch (d) {
    case Dtype::Float64: return 8;
    case Dtype::Complex128: return 16;
    case Dtype::UInt8: return 1;
  }
  throw IoError("unknown dtype code");
}

Grid grid_from_header(const GridFileHeader& h) {
  std::vector<Axis> axes;
  for (std::size_t d = 0; d < h.shape.size(); ++d) {
    axes.emplace_back(static_cast<std::size_t>(h.shape[d]), h.spacing[d]);
  }
  return Grid(std::move(axes));
}

GridFileHeader header_for(const Grid& grid, Dtype dtype, PayloadKind kind,
                          std::vector<double> meta) {
  GridFileHeader h;
  h.dtype = dtype;
  h.kind = kind;
  for (const auto& a : grid.axes()) {
    h.shape.push_back(a.n);
    h.spacing.push_back(a.spacing);
  }
  h.meta = std::move(meta);
  return h;
}

}  // namespace

std::size_t GridFileHeader::element_count() const {
  std::size_t count = 1;
  for (auto s : shape) count *= static_cast<std::size_t>(s);
  if (kind == PayloadKind::FrameStack) count *= static_cast<std::size_t>(n_frames);
  return count;
}

void write_grid_file(const std::filesystem::path& path, const GridFileHeader& header,
                     const void* payload, std::size_t payload_bytes) {
  if (header.shape.size() != header.spacing.size() || header.shape.empty()) {
    throw ShapeError("grid header: shape and spacing must have equal, non-zero length");
  }
  if (payload_bytes != header.element_count() * dtype_size(header.dtype)) {
    throw ShapeError("grid header: payload size does not match shape");
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  os.write(kMagic, sizeof(kMagic));
  put<std::uint32_t>(os, static_cast<std::uint32_t>(header.dtype));
  put<std::uint32_t>(os, static_cast<std::uint32_t>(header.kind));
  put<std::uint32_t>(os, static_cast<std::uint32_t>(header.shape.size()));
  for (auto s : header.shape) put<std::uint64_t>(os, s);
  for (auto d : header.spacing) put<double>(os, d);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(header.meta.size()));
  for (auto m : header.meta) put<double>(os, m);
  if (header.kind == PayloadKind::FrameStack) put<std::uint64_t>(os, header.n_frames);
  os.write(static_cast<const char*>(payload), static_cast<std::streamsize>(payload_bytes));
  if (!os) throw IoError("write failed for " + path.string());
}

GridFile read_grid_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  char magic[8];
  if (!is.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw IoError(path.string() + " is not a BPHGRID1 file");
  }
  GridFile file;
  auto& h = file.header;
  h.dtype = static_cast<Dtype>(get<std::uint32_t>(is, path));
  dtype_size(h.dtype);
  h.kind = static_cast<PayloadKind>(get<std::uint32_t>(is, path));
  const auto ndim = get<std::uint32_t>(is, path);
  if (ndim == 0 || ndim > 4) throw IoError("unsupported rank in " + path.string());
  for (std::uint32_t d = 0; d < ndim; ++d) h.shape.push_back(get<std::uint64_t>(is, path));
  for (std::uint32_t d = 0; d < ndim; ++d) h.spacing.push_back(get<double>(is, path));
  const auto n_meta = get<std::uint32_t>(is, path);
  if (n_meta > 64) throw IoError("implausible metadata count in " + path.string());
  for (std::uint32_t m = 0; m < n_meta; ++m) h.meta.push_back(get<double>(is, path));
  if (h.kind == PayloadKind::FrameStack) h.n_frames = get<std::uint64_t>(is, path);
  const std::size_t bytes = h.element_count() * dtype_size(h.dtype);
  file.payload.resize(bytes);
  if (!is.read(reinterpret_cast<char*>(file.payload.data()), static_cast<std::streamsize>(bytes))) {
    throw IoError("truncated payload in " + path.string());
  }
  return file;
}

void write_field(const std::filesystem::path& path, const RealField& field, PayloadKind kind,
                 std::vector<double> meta) {
  const auto h = header_for(field.grid, Dtype::Float64, kind, std::move(meta));
  write_grid_file(path, h, field.values.data(), field.values.size() * sizeof(double));
}

void write_field(const std::filesystem::path& path, const ComplexField& field, PayloadKind kind,
                 std::vector<double> meta) {
  const auto h = header_for(field.grid, Dtype::Complex128, kind, std::move(meta));
  write_grid_file(path, h, field.values.data(), field.values.size() * sizeof(complex));
}

RealField read_real_field(const std::filesystem::path& path, std::vector<double>* meta) {
  auto file = read_grid_file(path);
  if (file.header.dtype != Dtype::Float64) throw IoError(path.string() + " is not float64");
  RealField field(grid_from_header(file.header));
  std::memcpy(field.values.data(), file.payload.data(), file.payload.size());
  if (meta != nullptr) *meta = file.header.meta;
  return field;
}

ComplexField read_complex_field(const std::filesystem::path& path, std::vector<double>* meta) {
  auto file = read_grid_file(path);
  if (file.header.dtype != Dtype::Complex128) throw IoError(path.string() + " is not complex128");
  ComplexField field(grid_from_header(file.header));
  std::memcpy(field.values.data(), file.payload.data(), file.payload.size());
  if (meta != nullptr) *meta = file.header.meta;
  return field;
}

RealField cross_section(const RealField& field, std::size_t axis, double offset) {
  if (field.grid.rank() != 2) throw ShapeError("cross_section expects a 2D field");
  if (axis > 1) throw ShapeError("cross_section axis must be 0 or 1");
  const Axis& cut = field.grid.axis(axis);
  const Axis& along = field.grid.axis(1 - axis);
  const double pos = offset / cut.spacing + static_cast<double>(cut.n / 2);
  const long idx = std::lround(pos);
  if (idx < 0 || idx >= static_cast<long>(cut.n)) {
    throw GeometryError("cross_section offset lies outside the grid");
  }
  RealField profile(Grid({along}));
  for (std::size_t i = 0; i < along.n; ++i) {
    profile.values[i] = axis == 1 ? field.at(i, static_cast<std::size_t>(idx))
                                  : field.at(static_cast<std::size_t>(idx), i);
  }
  return profile;
}

void write_profile_csv(const std::filesystem::path& path, const RealField& profile,
                       const std::string& value_name) {
  write_profiles_csv(path, {{value_name, &profile}});
}

void write_profiles_csv(const std::filesystem::path& path,
                        const std::vector<std::pair<std::string, const RealField*>>& series) {
  if (series.empty()) throw ShapeError("write_profiles_csv: no series");
  const Grid& grid = series.front().second->grid;
  if (grid.rank() != 1) throw ShapeError("write_profiles_csv expects 1D fields");
  for (const auto& [name, f] : series) {
    if (!f->grid.matches(grid)) throw ShapeError("write_profiles_csv: series '" + name + "' grid differs");
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  os << "coordinate";
  for (const auto& s : series) os << ',' << s.first;
  os << '\n';
  os << std::setprecision(std::numeric_limits<double>::max_digits10);
  const Axis& a = grid.axis(0);
  for (std::size_t i = 0; i < a.n; ++i) {
    os << a.coordinate(i);
    for (const auto& s : series) os << ',' << s.second->values[i];
    os << '\n';
  }
}

}  // namespace biphoton
