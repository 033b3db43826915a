#pragma once

#include <string>

#include "cgflow/latent.hpp"

namespace cgflow {

// Binary latent container: magic "CGFL", u32 version (= 1), u32 frames,
// height, width, channels, then frames*height*width*channels float32 values,
// little-endian, row-major with channels innermost.
//
// Values are stored as float32, so writing narrows doubles; a write/read/write
// cycle of any file is byte-identical.
void save_latent(const std::string& path, const Latent& z);

// Rejects non-finite entries; use load_plane_raw for depth maps.
Latent load_latent(const std::string& path);

// Masks ride in the same container with channels = 1 and entries in {0, 1}.
void save_mask(const std::string& path, const VideoMask& m);
VideoMask load_mask(const std::string& path);

// Same container without the finiteness check (depth maps mark uncovered
// pixels with +inf).
Latent load_plane_raw(const std::string& path);

}  // namespace cgflow
