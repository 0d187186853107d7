#pragma once

#include <string>

#include "spectral/transformer.hpp"

namespace spectral {

/// Binary parameter container: "SPTFPAR1", u64 LE header length, JSON header,
/// then every matrix as row-major little-endian float64 (layout in docs/param_format.md).
/// `extra_json` must be a JSON object; it is stored under the header key "extra".
std::string serialize_params(const TransformerParams& params, const std::string& extra_json = "{}");
TransformerParams deserialize_params(const std::string& bytes, std::string* extra_json = nullptr);

void save_params(const std::string& path, const TransformerParams& params, const std::string& extra_json = "{}");
TransformerParams load_params(const std::string& path, std::string* extra_json = nullptr);

}  // namespace spectral
