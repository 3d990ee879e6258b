#pragma once

#include <filesystem>

#include "pkef/core/params.hpp"

namespace pkef {

// Binary layout: "PKEF", u32 version, u32 parameter count, then per
// parameter (u32 name length, name bytes, u64 rows, u64 cols), then every
// value as a little-endian IEEE-754 double in store order.
inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const ParameterStore& params, const std::filesystem::path& path);

// Overwrites the values of `params`. Throws FormatError for damaged files
// and ConfigError when the stored names or shapes differ from the store.
void load_checkpoint(ParameterStore& params, const std::filesystem::path& path);

}  // namespace pkef
