#pragma once

#include <stdexcept>
#include <string>

namespace selgan {

/// Base class of every error thrown by the library. `kind()` is a short tag
/// ("shape", "schema", ...) that the CLI prefixes to stage failure messages.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& what)
        : std::runtime_error(what), kind_(std::move(kind)) {}

    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

#define SELGAN_DEFINE_ERROR(Name, tag)                                      \
    class Name : public Error {                                             \
    public:                                                                 \
        explicit Name(const std::string& what) : Error(tag, what) {}        \
    };

SELGAN_DEFINE_ERROR(ShapeError, "shape")
SELGAN_DEFINE_ERROR(NumericError, "numeric")
SELGAN_DEFINE_ERROR(SchemaError, "schema")
SELGAN_DEFINE_ERROR(DataError, "data")
SELGAN_DEFINE_ERROR(LayoutError, "layout")
SELGAN_DEFINE_ERROR(ArgumentError, "argument")
SELGAN_DEFINE_ERROR(ConfigError, "config")
SELGAN_DEFINE_ERROR(IngestionError, "ingestion")
SELGAN_DEFINE_ERROR(FormatError, "format")
SELGAN_DEFINE_ERROR(TypeError, "type")

#undef SELGAN_DEFINE_ERROR

} // namespace selgan
