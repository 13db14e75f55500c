#pragma once

#include <stdexcept>
#include <string>

namespace biphoton {

/// Coarse error classes; the CLI maps each one to its own exit code.
enum class ErrorCategory {
  Shape,
  Domain,
  Resolution,
  Geometry,
  Estimation,
  InsufficientData,
  Schema,
  Resource,
  Io,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& message)
      : std::runtime_error(message), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

#define BIPHOTON_DEFINE_ERROR(Name, Category)                              \
  class Name : public Error {                                              \
   public:                                                                 \
    explicit Name(const std::string& message)                              \
        : Error(ErrorCategory::Category, message) {}                       \
  };

BIPHOTON_DEFINE_ERROR(ShapeError, Shape)
BIPHOTON_DEFINE_ERROR(DomainError, Domain)
BIPHOTON_DEFINE_ERROR(ResolutionError, Resolution)
BIPHOTON_DEFINE_ERROR(GeometryError, Geometry)
BIPHOTON_DEFINE_ERROR(EstimationError, Estimation)
BIPHOTON_DEFINE_ERROR(InsufficientDataError, InsufficientData)
BIPHOTON_DEFINE_ERROR(SchemaError, Schema)
BIPHOTON_DEFINE_ERROR(ResourceError, Resource)
BIPHOTON_DEFINE_ERROR(IoError, Io)

#undef BIPHOTON_DEFINE_ERROR

}  // namespace biphoton
