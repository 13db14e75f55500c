#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "biphoton/grid.hpp"

namespace biphoton {

/// Flat binary array format (all little-endian):
///
///   char[8]  magic "BPHGRID1"
///   u32      dtype        1 = float64, 2 = complex128 (re, im), 3 = uint8
///   u32      kind         see PayloadKind
///   u32      ndim
///   u64      shape[ndim]
///   f64      spacing[ndim]
///   u32      n_meta
///   f64      meta[n_meta]  kind-specific scalars
///   u64      n_frames      only for kind == FrameStack
///   payload  row-major, (n_frames x) prod(shape) elements
///
/// Axis i of length n has sample j at (j - floor(n/2)) * spacing[i].
enum class Dtype : std::uint32_t { Float64 = 1, Complex128 = 2, UInt8 = 3 };

enum class PayloadKind : std::uint32_t {
  Field = 0,
  TwoPhotonAmplitude = 1,  // meta: sigma_plus, sigma_minus, photon dims
  FrameStack = 2,          // meta: detector model scalars
  PhaseMask = 3,           // meta: pupil radius (NaN when unbounded)
  CoincidenceMap = 4,      // meta: frame count; odd shape, offsets from the centre
  CorrelationMap = 5,
  PumpPattern = 6,
};

struct GridFileHeader {
  Dtype dtype = Dtype::Float64;
  PayloadKind kind = PayloadKind::Field;
  std::vector<std::uint64_t> shape;
  std::vector<double> spacing;
  std::vector<double> meta;
  std::uint64_t n_frames = 0;

  std::size_t element_count() const;
};

struct GridFile {
  GridFileHeader header;
  std::vector<unsigned char> payload;
};

void write_grid_file(const std::filesystem::path& path, const GridFileHeader& header,
                     const void* payload, std::size_t payload_bytes);
GridFile read_grid_file(const std::filesystem::path& path);

void write_field(const std::filesystem::path& path, const RealField& field,
                 PayloadKind kind = PayloadKind::Field, std::vector<double> meta = {});
void write_field(const std::filesystem::path& path, const ComplexField& field,
                 PayloadKind kind = PayloadKind::Field, std::vector<double> meta = {});

/// Reads a float64 file whose every axis is even; `meta` receives the header scalars.
RealField read_real_field(const std::filesystem::path& path, std::vector<double>* meta = nullptr);
ComplexField read_complex_field(const std::filesystem::path& path,
                                std::vector<double>* meta = nullptr);

/// 1D profile of a 2D field through the sample nearest `offset` on `axis`
/// (axis 1 = y: the returned profile runs along x at y ~ offset).
RealField cross_section(const RealField& field, std::size_t axis, double offset);

/// Two-column CSV "coordinate,value" for a 1D field.
void write_profile_csv(const std::filesystem::path& path, const RealField& profile,
                       const std::string& value_name = "value");
/// Several 1D fields sharing a grid, one column per series.
void write_profiles_csv(const std::filesystem::path& path,
                        const std::vector<std::pair<std::string, const RealField*>>& series);

}  // namespace biphoton
