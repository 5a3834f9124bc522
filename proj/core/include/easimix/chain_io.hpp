#pragma once

#include "easimix/gibbs.hpp"

#include <cstdint>
#include <string>

namespace easimix {

inline constexpr int kChainFormatVersion = 1;

/// Hash of everything that fixes the binary layout: dimensions, snapshot
/// count, sweep count, observation count and the latent-storage flag.
std::uint64_t chain_layout_hash(const Dimensions& dims, std::size_t snapshots, std::size_t sweeps, int observations,
                                bool store_latent);

/// Writes `<stem>.json` (manifest, settings, priors, notes) and `<stem>.bin`
/// (snapshots and per-sweep traces). A directory path means `<dir>/chain`.
void persist_chain(const Chain& chain, const std::string& path);

/// Accepts the stem, either file, or a directory. Throws IoError when the
/// manifest is malformed, the layout hash disagrees, the payload is
/// truncated or its checksum does not match.
Chain load_chain(const std::string& path);

}  // namespace easimix
